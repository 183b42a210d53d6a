#pragma once

// Transformation laws T_K^omega: linear, isometric maps of K velocities in
// R^d, parameterized by a scattering angle drawn from the law's kernel.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kac/errors.hpp"
#include "kac/random.hpp"
#include "kac/state.hpp"
#include "kac/stats.hpp"

namespace kac {

enum class LawKind {
  Identity,            // T = id; a trivially admissible law of any order
  BinaryMaxwell,       // momentum exchange along omega on S^{d-1}
  KacToy,              // rotation by theta in (-pi, pi), d = 1
  SymmetricK,          // Householder reflection on R^{dK}
  SymmetricKMomentum,  // same map, omega restricted to sum_l omega_l = 0
};

/// Even angular densities for the Kac toy model.
enum class AngleKernel { Uniform, RaisedCosine };

struct LawSpec {
  LawKind kind = LawKind::Identity;
  int order = 1;
  int dimension = 1;
  AngleKernel kernel = AngleKernel::Uniform;

  static LawSpec identity(int order, int d) { return {LawKind::Identity, order, d}; }
  static LawSpec binary_maxwell(int d) { return {LawKind::BinaryMaxwell, 2, d}; }
  static LawSpec kac_toy(AngleKernel k = AngleKernel::Uniform) {
    return {LawKind::KacToy, 2, 1, k};
  }
  static LawSpec symmetric(int order, int d) { return {LawKind::SymmetricK, order, d}; }
  static LawSpec symmetric_momentum(int order, int d) {
    return {LawKind::SymmetricKMomentum, order, d};
  }

  /// Number of reals in one velocity block (K d).
  std::size_t block_size() const { return static_cast<std::size_t>(order * dimension); }

  /// Length of a scattering-angle payload.
  std::size_t angle_size() const {
    switch (kind) {
      case LawKind::Identity: return 0;
      case LawKind::BinaryMaxwell: return static_cast<std::size_t>(dimension);
      case LawKind::KacToy: return 1;
      case LawKind::SymmetricK:
      case LawKind::SymmetricKMomentum: return block_size();
    }
    return 0;
  }

  /// True when T^omega is its own inverse for every omega.
  bool pointwise_involution() const { return kind != LawKind::KacToy; }

  std::string name() const {
    switch (kind) {
      case LawKind::Identity: return "identity(K=" + std::to_string(order) + ")";
      case LawKind::BinaryMaxwell: return "binary_maxwell(d=" + std::to_string(dimension) + ")";
      case LawKind::KacToy:
        return kernel == AngleKernel::Uniform ? "kac_toy(uniform)" : "kac_toy(raised_cosine)";
      case LawKind::SymmetricK:
        return "symmetric(K=" + std::to_string(order) + ",d=" + std::to_string(dimension) + ")";
      case LawKind::SymmetricKMomentum:
        return "symmetric_momentum(K=" + std::to_string(order) +
               ",d=" + std::to_string(dimension) + ")";
    }
    return "?";
  }

  friend bool operator==(const LawSpec&, const LawSpec&) = default;
};

inline void validate(const LawSpec& law) {
  require(law.order >= 1, "law order must be >= 1");
  require(law.dimension >= 1, "law dimension must be >= 1");
  switch (law.kind) {
    case LawKind::BinaryMaxwell:
      require(law.order == 2, "binary_maxwell has order 2");
      break;
    case LawKind::KacToy:
      require(law.order == 2, "kac_toy has order 2");
      require(law.dimension == 1, "kac_toy requires d = 1");
      break;
    case LawKind::SymmetricKMomentum:
      require(law.order >= 2, "symmetric_momentum requires K >= 2");
      break;
    case LawKind::Identity:
    case LawKind::SymmetricK:
      break;
  }
}

/// Even, normalized density of the Kac toy kernel on (-pi, pi).
inline double kernel_density(AngleKernel k, double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  switch (k) {
    case AngleKernel::Uniform: return 1.0 / two_pi;
    case AngleKernel::RaisedCosine: return (1.0 + std::cos(theta)) / two_pi;
  }
  return 0.0;
}

/// omega in S_K. The payload shape depends on the owning law (see
/// LawSpec::angle_size).
struct ScatteringAngle {
  LawKind law = LawKind::Identity;
  std::vector<double> payload;
};

/// Builds an angle from an explicit payload, enforcing the law's
/// constraint (unit norm within 1e-12, theta in the open interval, zero
/// block sum for the momentum-conserving law).
inline ScatteringAngle make_angle(const LawSpec& law, std::vector<double> payload) {
  validate(law);
  require(payload.size() == law.angle_size(), "angle payload has the wrong length for " + law.name());
  for (double x : payload) require(std::isfinite(x), "angle payload must be finite");
  switch (law.kind) {
    case LawKind::Identity: break;
    case LawKind::KacToy:
      require(payload[0] > -std::numbers::pi && payload[0] < std::numbers::pi,
              "kac_toy angle must lie in (-pi, pi)");
      break;
    case LawKind::BinaryMaxwell:
    case LawKind::SymmetricK:
    case LawKind::SymmetricKMomentum: {
      double n2 = 0.0;
      for (double x : payload) n2 += x * x;
      require(std::abs(std::sqrt(n2) - 1.0) <= 1e-12, "angle must be a unit vector");
      if (law.kind == LawKind::SymmetricKMomentum) {
        for (int j = 0; j < law.dimension; ++j) {
          double s = 0.0;
          for (int l = 0; l < law.order; ++l) s += payload[static_cast<std::size_t>(l * law.dimension + j)];
          require(std::abs(s) <= 1e-12, "symmetric_momentum angle must have zero block sum");
        }
      }
      break;
    }
  }
  return {law.kind, std::move(payload)};
}

/// Draws omega ~ b_K into `angle`, reusing its storage.
inline void sample_angle_into(const LawSpec& law, Stream& rng, ScatteringAngle& angle) {
  angle.law = law.kind;
  angle.payload.resize(law.angle_size());
  switch (law.kind) {
    case LawKind::Identity: return;
    case LawKind::KacToy: {
      constexpr double pi = std::numbers::pi;
      if (law.kernel == AngleKernel::Uniform) {
        angle.payload[0] = -pi + 2.0 * pi * rng.uniform_open();
        return;
      }
      for (;;) {
        const double theta = -pi + 2.0 * pi * rng.uniform_open();
        if (2.0 * rng.uniform() < 1.0 + std::cos(theta)) {
          angle.payload[0] = theta;
          return;
        }
      }
    }
    case LawKind::BinaryMaxwell:
    case LawKind::SymmetricK: sample_unit_sphere(rng, angle.payload); return;
    case LawKind::SymmetricKMomentum: {
      const auto d = static_cast<std::size_t>(law.dimension);
      const auto k = static_cast<std::size_t>(law.order);
      auto& w = angle.payload;
      for (;;) {
        for (double& x : w) x = rng.normal();
        for (std::size_t j = 0; j < d; ++j) {
          double mean = 0.0;
          for (std::size_t l = 0; l < k; ++l) mean += w[l * d + j];
          mean /= static_cast<double>(k);
          for (std::size_t l = 0; l < k; ++l) w[l * d + j] -= mean;
        }
        double n2 = 0.0;
        for (double x : w) n2 += x * x;
        const double n = std::sqrt(n2);
        if (n < 1e-12) continue;
        for (double& x : w) x /= n;
        return;
      }
    }
  }
}

inline ScatteringAngle sample_angle(const LawSpec& law, Stream& rng) {
  ScatteringAngle a;
  sample_angle_into(law, rng, a);
  return a;
}

namespace detail {

inline void check_block(const LawSpec& law, const ScatteringAngle& angle, std::size_t n) {
  require(angle.law == law.kind, "scattering angle belongs to a different law");
  require(angle.payload.size() == law.angle_size(), "scattering angle has the wrong length");
  if (n != law.block_size())
    throw ContractViolation(law.name() + " expects " + std::to_string(law.order) +
                            " velocities of dimension " + std::to_string(law.dimension));
}

inline void rotate(double theta, std::span<double> v) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double x = v[0];
  const double y = v[1];
  v[0] = x * c + y * s;
  v[1] = -x * s + y * c;
}

}  // namespace detail

/// V <- T^omega V, with V the K velocities of one collision stored
/// contiguously (K d reals).
inline void apply_law_inplace(const LawSpec& law, const ScatteringAngle& angle, std::span<double> v) {
  detail::check_block(law, angle, v.size());
  const auto& w = angle.payload;
  switch (law.kind) {
    case LawKind::Identity: return;
    case LawKind::KacToy: detail::rotate(w[0], v); return;
    case LawKind::BinaryMaxwell: {
      const auto d = static_cast<std::size_t>(law.dimension);
      double g = 0.0;
      for (std::size_t j = 0; j < d; ++j) g += w[j] * (v[d + j] - v[j]);
      for (std::size_t j = 0; j < d; ++j) {
        v[j] += g * w[j];
        v[d + j] -= g * w[j];
      }
      return;
    }
    case LawKind::SymmetricK:
    case LawKind::SymmetricKMomentum: {
      double p = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) p += w[i] * v[i];
      const double two_p = 2.0 * p;
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= two_p * w[i];
      return;
    }
  }
}

/// V <- (T^omega)^{-1} V.
inline void apply_inverse_inplace(const LawSpec& law, const ScatteringAngle& angle,
                                  std::span<double> v) {
  if (law.kind == LawKind::KacToy) {
    detail::check_block(law, angle, v.size());
    detail::rotate(-angle.payload[0], v);
    return;
  }
  apply_law_inplace(law, angle, v);
}

inline std::vector<double> apply_law(const LawSpec& law, const ScatteringAngle& angle,
                                     std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  apply_law_inplace(law, angle, out);
  return out;
}

/// T^omega_{i_1..i_K}: applies the law to the velocities at `indices`, taken
/// in the given order, and leaves every other particle untouched.
/// `scratch` must hold at least K d reals.
inline void apply_on_master(const LawSpec& law, const ScatteringAngle& angle,
                            std::span<const std::size_t> indices, MasterState& state,
                            std::span<double> scratch) {
  if (indices.size() != static_cast<std::size_t>(law.order))
    throw ContractViolation("apply_on_master: expected " + std::to_string(law.order) + " indices");
  require(state.dimension == law.dimension, "apply_on_master: dimension mismatch");
  require(state.particles >= indices.size(), "apply_on_master: fewer particles than colliders");
  for (std::size_t a = 0; a < indices.size(); ++a) {
    require(indices[a] < state.particles, "apply_on_master: index out of range");
    for (std::size_t b = 0; b < a; ++b)
      require(indices[a] != indices[b], "apply_on_master: repeated index");
  }
  const auto d = static_cast<std::size_t>(law.dimension);
  auto block = scratch.first(law.block_size());
  for (std::size_t a = 0; a < indices.size(); ++a)
    std::copy_n(state.velocities.begin() + static_cast<std::ptrdiff_t>(indices[a] * d), d,
                block.begin() + static_cast<std::ptrdiff_t>(a * d));
  apply_law_inplace(law, angle, block);
  for (std::size_t a = 0; a < indices.size(); ++a)
    std::copy_n(block.begin() + static_cast<std::ptrdiff_t>(a * d), d,
                state.velocities.begin() + static_cast<std::ptrdiff_t>(indices[a] * d));
}

inline MasterState apply_on_master(const LawSpec& law, const ScatteringAngle& angle,
                                   std::span<const std::size_t> indices, MasterState state) {
  std::vector<double> scratch(law.block_size());
  apply_on_master(law, angle, indices, state, scratch);
  return state;
}

// ---------------------------------------------------------------------------
// Validators for the structural hypotheses.

/// Paired Monte-Carlo comparison of two omega-averages.
struct StatReport {
  double mean_forward = 0.0;  // E_omega[phi(T V)]
  double mean_other = 0.0;    // E_omega[phi(T^-1 V)] or E_omega[phi(sigma T sigma^-1 V)]
  double difference = 0.0;    // mean of the paired differences
  double combined_stderr = 0.0;
  std::size_t samples = 0;
  bool exact = false;  // every paired difference was exactly zero

  /// |difference| <= 3 standard errors.
  bool pass() const { return std::abs(difference) <= 3.0 * combined_stderr; }
};

struct IsometryReport {
  double max_relative_error = 0.0;
  std::size_t samples = 0;
  bool pass(double tol = 1e-10) const { return max_relative_error <= tol; }
};

/// Isometry check: draws `samples` (omega, V) pairs with V ~ scale * N(0, I) and
/// records max | |TV|^2 - |V|^2 | / max(1, |V|^2).
inline IsometryReport check_h1_isometry(const LawSpec& law, std::size_t samples, Stream& rng,
                                        double scale = 3.0) {
  validate(law);
  IsometryReport r;
  r.samples = samples;
  std::vector<double> v(law.block_size());
  ScatteringAngle angle;
  for (std::size_t i = 0; i < samples; ++i) {
    for (double& x : v) x = scale * rng.normal();
    double before = 0.0;
    for (double x : v) before += x * x;
    sample_angle_into(law, rng, angle);
    apply_law_inplace(law, angle, v);
    double after = 0.0;
    for (double x : v) after += x * x;
    r.max_relative_error =
        std::max(r.max_relative_error, std::abs(after - before) / std::max(1.0, before));
  }
  return r;
}

namespace detail {

template <class Probe, class Transform>
StatReport paired_report(const LawSpec& law, Probe&& probe, std::span<const double> v,
                         std::size_t samples, Stream& rng, Transform&& other) {
  validate(law);
  require(v.size() == law.block_size(), "validator: probe point has the wrong size");
  ScalarAccumulator fwd, alt, diff;
  std::vector<double> a(v.begin(), v.end()), b(v.begin(), v.end());
  ScatteringAngle angle;
  bool exact = true;
  for (std::size_t i = 0; i < samples; ++i) {
    sample_angle_into(law, rng, angle);
    std::copy(v.begin(), v.end(), a.begin());
    std::copy(v.begin(), v.end(), b.begin());
    apply_law_inplace(law, angle, a);
    other(angle, std::span<double>(b));
    const double x = probe(std::span<const double>(a));
    const double y = probe(std::span<const double>(b));
    fwd.add(x);
    alt.add(y);
    diff.add(x - y);
    if (x != y) exact = false;
  }
  StatReport r;
  r.mean_forward = fwd.mean();
  r.mean_other = alt.mean();
  r.difference = diff.mean();
  r.combined_stderr = diff.stderr_of_mean();
  r.samples = samples;
  r.exact = exact;
  return r;
}

}  // namespace detail

/// Involution check: compares E[phi(T V)] with E[phi(T^-1 V)] under b_K using paired
/// draws of omega.
template <class Probe>
StatReport check_h2_involution(const LawSpec& law, Probe&& probe, std::span<const double> v,
                               std::size_t samples, Stream& rng) {
  return detail::paired_report(law, probe, v, samples, rng,
                               [&](const ScatteringAngle& angle, std::span<double> b) {
                                 apply_inverse_inplace(law, angle, b);
                               });
}

/// Labeling-symmetry check: compares E[phi((sigma T sigma^-1) V)] with E[phi(T V)], where
/// sigma(V) = (V_sigma(1), ..., V_sigma(K)) and `sigma` lists sigma(i) for
/// i = 0..K-1.
template <class Probe>
StatReport check_h3_symmetry(const LawSpec& law, Probe&& probe, std::span<const double> v,
                             std::span<const int> sigma, std::size_t samples, Stream& rng) {
  const auto k = static_cast<std::size_t>(law.order);
  const auto d = static_cast<std::size_t>(law.dimension);
  require(sigma.size() == k, "check_h3_symmetry: permutation has the wrong length");
  std::vector<int> seen(k, 0);
  for (int s : sigma) {
    require(s >= 0 && static_cast<std::size_t>(s) < k && !seen[static_cast<std::size_t>(s)],
            "check_h3_symmetry: not a permutation");
    seen[static_cast<std::size_t>(s)] = 1;
  }
  std::vector<double> tmp(law.block_size());
  return detail::paired_report(
      law, probe, v, samples, rng, [&](const ScatteringAngle& angle, std::span<double> b) {
        // W = sigma^-1 V, i.e. W_{sigma(i)} = V_i.
        for (std::size_t i = 0; i < k; ++i)
          std::copy_n(b.begin() + static_cast<std::ptrdiff_t>(i * d), d,
                      tmp.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(sigma[i]) * d));
        apply_law_inplace(law, angle, tmp);
        // result = sigma W*, i.e. result_i = W*_{sigma(i)}.
        for (std::size_t i = 0; i < k; ++i)
          std::copy_n(tmp.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(sigma[i]) * d), d,
                      b.begin() + static_cast<std::ptrdiff_t>(i * d));
      });
}

// ---------------------------------------------------------------------------
// Mixtures.

/// Normalized mixture of laws of orders 1..M; laws[K-1] has order K.
struct MixtureSpec {
  int dimension = 1;
  std::vector<double> betas;
  std::vector<LawSpec> laws;

  int max_order() const { return static_cast<int>(betas.size()); }

  /// Total loss rate alpha = sum_K beta_K K.
  double alpha() const {
    double a = 0.0;
    for (std::size_t k = 0; k < betas.size(); ++k) a += betas[k] * static_cast<double>(k + 1);
    return a;
  }
};

inline void validate(const MixtureSpec& m) {
  require(!m.betas.empty(), "mixture needs M >= 1");
  require(m.laws.size() == m.betas.size(), "mixture needs one law per order");
  double sum = 0.0;
  for (double b : m.betas) {
    require(std::isfinite(b) && b >= 0.0, "mixture weights must be nonnegative");
    sum += b;
  }
  require(std::abs(sum - 1.0) <= 1e-12, "mixture weights must sum to 1");
  for (std::size_t k = 0; k < m.laws.size(); ++k) {
    validate(m.laws[k]);
    require(m.laws[k].order == static_cast<int>(k + 1),
            "mixture law at position " + std::to_string(k + 1) + " must have order " +
                std::to_string(k + 1));
    require(m.laws[k].dimension == m.dimension, "all mixture laws must share dimension d");
  }
}

/// Builds a mixture. Orders without an explicit law get the identity law
/// (a no-op collision), which is the usual filler for zero weights.
inline MixtureSpec make_mixture(int d, std::vector<double> betas,
                                std::vector<std::optional<LawSpec>> laws = {}) {
  MixtureSpec m;
  m.dimension = d;
  m.betas = std::move(betas);
  laws.resize(m.betas.size());
  for (std::size_t k = 0; k < laws.size(); ++k)
    m.laws.push_back(laws[k] ? *laws[k] : LawSpec::identity(static_cast<int>(k + 1), d));
  validate(m);
  return m;
}

/// A single law of order K as a mixture with beta_K = 1.
inline MixtureSpec single_law(const LawSpec& law) {
  std::vector<double> betas(static_cast<std::size_t>(law.order), 0.0);
  betas.back() = 1.0;
  std::vector<std::optional<LawSpec>> laws(betas.size());
  laws.back() = law;
  return make_mixture(law.dimension, std::move(betas), std::move(laws));
}

/// Draws an order K with probabilities proportional to `weights` by
/// inversion of the cumulative table.
class OrderSampler {
 public:
  explicit OrderSampler(std::span<const double> weights) {
    double acc = 0.0;
    for (double w : weights) {
      acc += w;
      cumulative_.push_back(acc);
    }
    total_ = acc;
  }
  /// Returns K in 1..M.
  int operator()(Stream& rng) const {
    const double u = rng.uniform() * total_;
    for (std::size_t k = 0; k < cumulative_.size(); ++k)
      if (u < cumulative_[k]) return static_cast<int>(k + 1);
    // u landed on the rounding tail; return the last order with weight.
    for (std::size_t k = cumulative_.size(); k-- > 0;)
      if (k == 0 || cumulative_[k] > cumulative_[k - 1]) return static_cast<int>(k + 1);
    return 1;
  }

 private:
  std::vector<double> cumulative_;
  double total_ = 0.0;
};

}  // namespace kac
