#pragma once

// Scalar constants of the BBGKY / Boltzmann hierarchy and a Monte-Carlo
// check of the trace identity
//   Tr_{s+1..N}(Omega_{i_1..i_K} f) = C^{s,K,n}_{i_1..i_n}[Tr_{s+r+1..N} f].

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "kac/errors.hpp"
#include "kac/laws.hpp"
#include "kac/observables.hpp"
#include "kac/random.hpp"
#include "kac/simulator.hpp"
#include "kac/stats.hpp"

namespace kac {

using uint128 = unsigned __int128;

/// binom(n, k) by the multiplicative form with running division; exact
/// while the result fits in 128 bits.
inline uint128 binomial_exact(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  uint128 r = 1;
  for (std::uint64_t j = 1; j <= k; ++j) {
    const uint128 num = n - k + j;
    if (r > std::numeric_limits<uint128>::max() / num) throw ContractViolation("binomial overflows 128 bits");
    r = r * num / j;  // r * num is divisible by j: it is j * binom(n-k+j, j)
  }
  return r;
}

inline double binomial(std::uint64_t n, std::uint64_t k) { return static_cast<double>(binomial_exact(n, k)); }

/// lambda(N, s, k) = N binom(N-s, k) / ((k+1) binom(N, k+1)), 0 when s + k > N.
/// Evaluated as prod_{j<k} (N-s-j)/(N-1-j), which is the same rational
/// after cancelling N binom(N-1, k) = (k+1) binom(N, k+1).
inline double coeff_leading(std::uint64_t N, std::uint64_t s, std::uint64_t k) {
  require(s >= 1 && s <= N, "coeff_leading needs 1 <= s <= N");
  if (s + k > N) return 0.0;
  double lambda = 1.0;
  for (std::uint64_t j = 0; j < k; ++j)
    lambda *= static_cast<double>(N - s - j) / static_cast<double>(N - 1 - j);
  return lambda;
}

/// 1 - lambda(N, s, k) without cancellation.
inline double coeff_leading_deficit(std::uint64_t N, std::uint64_t s, std::uint64_t k) {
  require(s >= 1 && s <= N, "coeff_leading needs 1 <= s <= N");
  if (s + k > N) return 1.0;
  double log_lambda = 0.0;
  for (std::uint64_t j = 0; j < k; ++j)
    log_lambda += std::log1p(-static_cast<double>(s - 1) / static_cast<double>(N - 1 - j));
  return -std::expm1(log_lambda);
}

namespace detail {

inline void check_betas(std::span<const double> betas) {
  require(!betas.empty(), "need at least one weight beta_K");
  double sum = 0.0;
  for (double b : betas) {
    require(b >= 0.0 && std::isfinite(b), "weights beta_K must be finite and nonnegative");
    sum += b;
  }
  require(std::abs(sum - 1.0) <= 1e-12, "weights beta_K must sum to 1");
}

inline void check_epsilon(double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) throw ContractViolation("epsilon must lie in [0, 1)");
}

}  // namespace detail

/// R_k = 2 sum_{l=k+1}^{M} beta_l (1-eps)^{-l} binom(l, k), k = 0..M-1.
inline std::vector<double> bound_R(std::span<const double> betas, double eps) {
  detail::check_betas(betas);
  detail::check_epsilon(eps);
  const std::size_t M = betas.size();
  std::vector<double> R(M, 0.0);
  for (std::size_t k = 0; k < M; ++k)
    for (std::size_t l = k + 1; l <= M; ++l)
      R[k] += 2.0 * betas[l - 1] * std::pow(1.0 - eps, -static_cast<double>(l)) * binomial(l, k);
  return R;
}

/// rho_k = 2 beta_{k+1} (k+1), k = 0..M-1.
inline std::vector<double> bound_rho(std::span<const double> betas) {
  detail::check_betas(betas);
  std::vector<double> rho(betas.size());
  for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = 2.0 * betas[k] * static_cast<double>(k + 1);
  return rho;
}

/// C_k = sum_{l=k+2}^{M} (1-eps)^{-l} beta_l binom(l, k), k = 0..M-1.
inline std::vector<double> bound_C(std::span<const double> betas, double eps) {
  detail::check_betas(betas);
  detail::check_epsilon(eps);
  const std::size_t M = betas.size();
  std::vector<double> C(M, 0.0);
  for (std::size_t k = 0; k < M; ++k)
    for (std::size_t l = k + 2; l <= M; ++l)
      C[k] += std::pow(1.0 - eps, -static_cast<double>(l)) * betas[l - 1] * binomial(l, k);
  return C;
}

struct Horizon {
  double T_star = 0.0;
  double T_max = 0.0;  // T_star / m; equal to T_star when m = 0
  std::size_t m = 0;
};

inline double weighted_e_sum(std::span<const double> c) {
  double acc = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) acc += c[k] * std::exp(static_cast<double>(k));
  return acc;
}

/// T_star = min(1 / sum R_k e^k, 1 / sum rho_k e^k) with m = len - 1.
inline Horizon horizon_T_star(std::span<const double> R, std::span<const double> rho) {
  require(!R.empty() && R.size() == rho.size(), "R and rho must have the same nonzero length m+1");
  Horizon h;
  h.m = R.size() - 1;
  h.T_star = std::min(1.0 / weighted_e_sum(R), 1.0 / weighted_e_sum(rho));
  h.T_max = h.m == 0 ? h.T_star : h.T_star / static_cast<double>(h.m);
  return h;
}

struct Thetas {
  double theta1 = 0.0;  // T sum R_k e^k
  double theta2 = 0.0;  // T sum rho_k e^k
};

inline Thetas thetas(std::span<const double> R, std::span<const double> rho, double T) {
  require(T >= 0.0, "T must be nonnegative");
  return {T * weighted_e_sum(R), T * weighted_e_sum(rho)};
}

struct HierarchyConstants {
  std::vector<double> betas;
  double epsilon = 0.5;
  std::vector<double> R, rho, C;
  Horizon horizon;
  double T = 0.0;
  Thetas theta;

  std::size_t M() const { return betas.size(); }
  std::size_t m() const { return horizon.m; }
};

/// All constants for one mixture. T < 0 picks T = T_max / 2.
inline HierarchyConstants compute_constants(std::span<const double> betas, double eps, double T = -1.0) {
  HierarchyConstants c;
  c.betas.assign(betas.begin(), betas.end());
  c.epsilon = eps;
  c.R = bound_R(betas, eps);
  c.rho = bound_rho(betas);
  c.C = bound_C(betas, eps);
  c.horizon = horizon_T_star(c.R, c.rho);
  c.T = T < 0.0 ? 0.5 * c.horizon.T_max : T;
  c.theta = thetas(c.R, c.rho, c.T);
  return c;
}

/// C_k s^2 / N; only proven for N >= M / eps.
inline double remainder_bound(std::uint64_t N, std::uint64_t s, std::size_t k, std::span<const double> betas,
                              double eps) {
  detail::check_betas(betas);
  if (!(eps > 0.0 && eps < 1.0)) throw ContractViolation("remainder bound needs epsilon in (0, 1)");
  const auto M = static_cast<double>(betas.size());
  if (static_cast<double>(N) < M / eps)
    throw ContractViolation("remainder bound needs N >= M / epsilon (N = " + std::to_string(N) + ")");
  require(s >= 1 && s <= N, "remainder bound needs 1 <= s <= N");
  require(k < betas.size(), "remainder bound needs 0 <= k <= M-1");
  const double Ck = bound_C(betas, eps)[k];
  const auto sd = static_cast<double>(s);
  return Ck * sd * sd / static_cast<double>(N);
}

/// log of s e^{-mu s} n! (m / T_star)^n (e n)^{s/m}.
inline double log_growth_bound(std::uint64_t s, std::uint64_t n, double mu, std::size_t m, double T_star) {
  if (n < 10) throw ContractViolation("growth bound needs n >= 10");
  require(m >= 1, "growth bound needs m >= 1");
  require(T_star > 0.0, "growth bound needs T_star > 0");
  require(mu >= -1.0, "growth bound needs mu >= -1");
  const auto sd = static_cast<double>(s), nd = static_cast<double>(n), md = static_cast<double>(m);
  return std::log(sd) - mu * sd + std::lgamma(nd + 1.0) + nd * std::log(md / T_star) +
         (sd / md) * (1.0 + std::log(nd));
}

inline double growth_bound(std::uint64_t s, std::uint64_t n, double mu, std::size_t m, double T_star) {
  return std::exp(log_growth_bound(s, n, mu, m, T_star));
}

/// s (m T / T_star)^{n+1} (e (n+1))^{s/m} e^s, evaluated in log space.
inline double remainder_factor(std::uint64_t s, std::uint64_t n, std::size_t m, double T, double T_star) {
  require(m >= 1, "remainder factor needs m >= 1");
  require(T > 0.0 && T_star > 0.0, "remainder factor needs T, T_star > 0");
  const auto sd = static_cast<double>(s), n1 = static_cast<double>(n + 1), md = static_cast<double>(m);
  const double lg = std::log(sd) + n1 * std::log(md * T / T_star) + (sd / md) * (1.0 + std::log(n1)) + sd;
  return std::exp(lg);
}

// ---------------------------------------------------------------------------
// Trace identity.

struct TracePattern {
  std::size_t K = 2;  // collision order
  std::size_t n = 1;  // colliding particles among the observed 1..s
  std::size_t s = 1;
  std::size_t N = 4;
  std::size_t r() const { return K - n; }
};

inline void validate(const TracePattern& p) {
  if (p.n < 1 || p.n > p.K) throw ContractViolation("trace pattern needs 1 <= n <= K");
  if (p.n > p.s) throw ContractViolation("trace pattern needs n <= s");
  if (p.s + p.r() > p.N) throw ContractViolation("trace pattern needs s + (K - n) <= N");
}

/// Monte-Carlo estimates of <LHS, phi_s> and <RHS, phi_s> for f = product of
/// the iid one-particle law `density` (default standard Gaussian).
///   LHS: V ~ f on R^{dN}, collide observed slots 0..n-1 with the last r
///        particles N-r..N-1, average phi(pi_s T V) - phi(pi_s V).
///   RHS: W ~ f^{(s+r)}, collide slots 0..n-1 with s..s+r-1, same average.
/// The two sides use independent streams, except when r = 0, where they are
/// the same expression and the report is exact.
inline StatReport verify_trace_identity(const LawSpec& law, const TracePattern& p, const ObservableSpec& phi,
                                        std::size_t samples, Stream& rng,
                                        const InitialLaw& density = InitialLaw::gaussian()) {
  validate(law);
  validate(p);
  require(static_cast<std::size_t>(law.order) == p.K, "law order must equal K");
  require(phi.order() == p.s, "probe must be a function of s velocities");
  require(density.iid(), "trace identity needs an iid reference density");
  require(samples >= 2, "need at least two samples");
  const int d = law.dimension;
  const auto dd = static_cast<std::size_t>(d);

  auto side = [&](std::size_t particles, std::size_t first_unobserved, Stream& stream) {
    std::vector<std::size_t> idx;
    for (std::size_t a = 0; a < p.n; ++a) idx.push_back(a);
    for (std::size_t b = 0; b < p.r(); ++b) idx.push_back(first_unobserved + b);
    MasterState st(particles, d);
    std::vector<double> block(law.block_size());
    ScatteringAngle angle;
    ScalarAccumulator acc;
    for (std::size_t i = 0; i < samples; ++i) {
      for (double& x : st.velocities) x = sample_coordinate(density, stream);
      const double before = phi(std::span<const double>(st.velocities).first(p.s * dd), d);
      sample_angle_into(law, stream, angle);
      apply_on_master(law, angle, idx, st, block);
      const double after = phi(std::span<const double>(st.velocities).first(p.s * dd), d);
      acc.add(after - before);
    }
    return acc;
  };

  const std::uint64_t base = rng();
  const auto tag = static_cast<std::uint64_t>(Purpose::TraceIdentity);
  Stream lhs_rng(base, stream_id({tag, p.K, p.n, p.s, p.N, 0}));
  const ScalarAccumulator lhs = side(p.N, p.N - p.r(), lhs_rng);

  StatReport rep;
  rep.samples = samples;
  rep.mean_forward = lhs.mean();
  if (p.r() == 0) {
    rep.mean_other = rep.mean_forward;
    rep.difference = 0.0;
    rep.combined_stderr = 0.0;
    rep.exact = true;
    return rep;
  }
  Stream rhs_rng(base, stream_id({tag, p.K, p.n, p.s, p.N, 1}));
  const ScalarAccumulator rhs = side(p.s + p.r(), p.s, rhs_rng);
  rep.mean_other = rhs.mean();
  rep.difference = rep.mean_forward - rep.mean_other;
  rep.combined_stderr = std::hypot(lhs.stderr_of_mean(), rhs.stderr_of_mean());
  return rep;
}

}  // namespace kac
