#pragma once

// Deterministic grid solver for the one-dimensional Kac toy Boltzmann
// equation (beta_2 = 1, alpha = 2) in mild form,
//   f(t) = e^{-2t} f0 + int_0^t e^{-2(t-s)} 2 G[f(s)] ds,
//   G[f](v) = int b(theta) int f(v c + w s) f(-v s + w c) dw dtheta,
// solved by Picard iteration on a uniform grid over [-L, L].

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <utility>
#include <algorithm>
#include <numbers>
#include <string>
#include <vector>

#include "kac/errors.hpp"
#include "kac/laws.hpp"
#include "kac/parallel.hpp"

namespace kac {

struct GridDensity {
  double L = 8.0;
  std::vector<double> values;  // f(-L + i h), i = 0..n_v-1

  std::size_t size() const { return values.size(); }
  double h() const { return 2.0 * L / static_cast<double>(values.size() - 1); }
  double v(std::size_t i) const { return -L + static_cast<double>(i) * h(); }

  double mass() const { return moment(0); }

  /// h sum v_i^p f_i
  double moment(int p) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) acc += std::pow(v(i), p) * values[i];
    return acc * h();
  }

  /// Linear interpolation, zero outside the grid.
  double at(double x) const {
    const double p = (x + L) / h();
    if (!(p >= 0.0)) return 0.0;
    const auto i = static_cast<std::size_t>(p);
    if (i + 1 >= values.size()) return 0.0;
    const double t = p - static_cast<double>(i);
    return (1.0 - t) * values[i] + t * values[i + 1];
  }

  double min_value() const {
    double m = values.empty() ? 0.0 : values[0];
    for (double x : values) m = std::min(m, x);
    return m;
  }

  template <class F>
  static GridDensity sample(F&& density, double L, std::size_t n_v, bool normalize = true) {
    if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("grid half-width L must be positive");
    if (n_v < 3) throw ConfigError("grid needs at least 3 points");
    GridDensity g{L, std::vector<double>(n_v)};
    for (std::size_t i = 0; i < n_v; ++i) g.values[i] = density(g.v(i));
    if (normalize) {
      const double m = g.mass();
      require(m > 0.0, "grid density has zero mass");
      for (double& x : g.values) x /= m;
    }
    return g;
  }

  static GridDensity gaussian(double L = 8.0, std::size_t n_v = 513) {
    return sample([](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }, L, n_v);
  }

  /// Uniform on [-a, a]. Each node carries the fraction of its cell
  /// [v - h/2, v + h/2] inside the support, so an endpoint that falls on a
  /// node gets half weight and an off-grid endpoint is not rounded away.
  static GridDensity uniform(double a, double L = 8.0, std::size_t n_v = 513) {
    if (!(a > 0.0)) throw ConfigError("uniform half-width a must be positive");
    const double h = 2.0 * L / static_cast<double>(std::max<std::size_t>(n_v, 2) - 1);
    return sample(
        [&](double x) {
          const double lo = std::max(x - 0.5 * h, -a), hi = std::min(x + 0.5 * h, a);
          return hi > lo ? (hi - lo) / h : 0.0;
        },
        L, n_v);
  }

  std::string to_csv() const {
    std::string out = "v,f\n";
    char buf[64];
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", v(i), values[i]);
      out += buf;
    }
    return out;
  }
};

struct PicardOptions {
  AngleKernel kernel = AngleKernel::Uniform;
  std::size_t n_theta = 64;
  std::size_t n_t = 32;
  std::size_t n_iter = 6;
  double t_guard = 0.125;  // 0.25 / alpha with alpha = 2
  double mass_tolerance = 1e-4;
  unsigned workers = 1;
};

struct PicardResult {
  GridDensity f;                   // f_{n_iter}(t_end)
  std::vector<double> increments;  // sup_t ||f_{n+1}(t) - f_n(t)||_1, n = 0..n_iter-1
  std::vector<double> mass;        // mass of f_{n+1}(t_end)
  double worst_mass_drift = 0.0;
  double min_value = 0.0;

  /// Observed contraction ratios increments[n] / increments[n-1].
  std::vector<double> ratios() const {
    std::vector<double> r;
    for (std::size_t n = 1; n < increments.size(); ++n)
      if (increments[n - 1] > 0.0) r.push_back(increments[n] / increments[n - 1]);
    return r;
  }
};

namespace detail {

struct AngleNodes {
  std::vector<double> c, s, w;
};

inline AngleNodes angle_nodes(AngleKernel kernel, std::size_t n) {
  AngleNodes q;
  const double dth = 2.0 * std::numbers::pi / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double th = -std::numbers::pi + (static_cast<double>(j) + 0.5) * dth;
    q.c.push_back(std::cos(th));
    q.s.push_back(std::sin(th));
    q.w.push_back(kernel_density(kernel, th) * dth);
    total += q.w.back();
  }
  for (double& x : q.w) x /= total;  // exact kernel mass keeps the gain term mass-exact
  return q;
}

/// G[f] on the grid of f.
inline std::vector<double> gain(const GridDensity& f, const AngleNodes& q) {
  const std::size_t n = f.size();
  const double h = f.h(), inv_h = 1.0 / h, L = f.L;
  const double* vals = f.values.data();
  std::vector<double> out(n, 0.0);
  auto interp_units = [&](double p) {
    if (!(p >= 0.0)) return 0.0;
    const auto i = static_cast<std::size_t>(p);
    if (i + 1 >= n) return 0.0;
    const double t = p - static_cast<double>(i);
    return vals[i] + t * (vals[i + 1] - vals[i]);
  };
  for (std::size_t j = 0; j < q.w.size(); ++j) {
    const double c = q.c[j], s = q.s[j], wt = q.w[j] * h;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = -L + static_cast<double>(i) * h;
      // Restrict w to where both rotated points land inside [-L, L].
      double lo = -L, hi = L;
      auto clip = [&](double a, double b) {  // |a + b w| < L
        if (b == 0.0) {
          if (std::abs(a) >= L) hi = lo - 1.0;
          return;
        }
        double w1 = (-L - a) / b, w2 = (L - a) / b;
        if (w1 > w2) std::swap(w1, w2);
        lo = std::max(lo, w1);
        hi = std::min(hi, w2);
      };
      clip(v * c, s);
      clip(-v * s, c);
      if (hi < lo) continue;
      const auto k0 = static_cast<std::size_t>(std::max(0.0, std::floor((lo + L) * inv_h)));
      const auto k1 = std::min(n - 1, static_cast<std::size_t>(std::ceil((hi + L) * inv_h)));
      // Positions in grid units are affine in k.
      const double px0 = (v * c - L * s + L) * inv_h, dpx = s;
      const double py0 = (-v * s - L * c + L) * inv_h, dpy = c;
      double acc = 0.0;
      for (std::size_t k = k0; k <= k1; ++k) {
        const double kk = static_cast<double>(k);
        acc += interp_units(px0 + kk * dpx) * interp_units(py0 + kk * dpy);
      }
      out[i] += wt * acc;
    }
  }
  return out;
}

inline double l1_distance(const std::vector<double>& a, const std::vector<double>& b, double h) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc * h;
}

}  // namespace detail

/// Picard iterates of the Kac toy equation on [0, t_end]. The zeroth
/// iterate is f0 at every time node.
inline PicardResult picard_solve_toy(const GridDensity& f0, double t_end, const PicardOptions& opt = {}) {
  if (!std::isfinite(t_end) || t_end < 0.0) throw ConfigError("t_end must be a finite nonnegative number");
  if (opt.n_theta < 2 || opt.n_t < 1 || opt.n_iter < 1) throw ConfigError("grid solver needs n_theta >= 2, n_t >= 1, n_iter >= 1");
  if (f0.size() < 3) throw ConfigError("grid needs at least 3 points");
  if (f0.min_value() < 0.0) throw ContractViolation("initial grid density must be nonnegative");
  if (std::abs(f0.mass() - 1.0) > opt.mass_tolerance) throw ContractViolation("initial grid density must be normalized");
  if (t_end >= opt.t_guard)
    throw NumericalError("t_end = " + std::to_string(t_end) + " is beyond the Picard stability horizon " +
                         std::to_string(opt.t_guard) + "; sub-step the solve (picard_solve_chained)");

  PicardResult res;
  res.f = f0;
  res.min_value = f0.min_value();
  if (t_end == 0.0) return res;

  constexpr double alpha = 2.0;
  const std::size_t nt = opt.n_t;
  const double dt = t_end / static_cast<double>(nt);
  const double h = f0.h();
  const auto q = detail::angle_nodes(opt.kernel, opt.n_theta);

  std::vector<GridDensity> cur(nt + 1, f0), next(nt + 1, f0);
  std::vector<std::vector<double>> g(nt + 1);
  for (std::size_t it = 0; it < opt.n_iter; ++it) {
    if (it == 0) {
      g[0] = detail::gain(f0, q);
      for (std::size_t l = 1; l <= nt; ++l) g[l] = g[0];
    } else {
      parallel_for(nt + 1, opt.workers, [&](std::size_t l) { g[l] = detail::gain(cur[l], q); });
    }
    double increment = 0.0;
    for (std::size_t j = 0; j <= nt; ++j) {
      const double tj = static_cast<double>(j) * dt;
      auto& out = next[j].values;
      const double decay = std::exp(-alpha * tj);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = decay * f0.values[i];
      for (std::size_t l = 0; l <= j && j > 0; ++l) {
        const double tw = (l == 0 || l == j) ? 0.5 * dt : dt;
        const double coef = tw * std::exp(-alpha * (tj - static_cast<double>(l) * dt)) * alpha;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += coef * g[l][i];
      }
      const double m = next[j].mass();
      res.worst_mass_drift = std::max(res.worst_mass_drift, std::abs(m - 1.0));
      res.min_value = std::min(res.min_value, next[j].min_value());
      increment = std::max(increment, detail::l1_distance(out, cur[j].values, h));
    }
    res.increments.push_back(increment);
    res.mass.push_back(next[nt].mass());
    if (res.worst_mass_drift > opt.mass_tolerance) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "Picard iterate %zu: mass drift %.3e exceeds %.1e", it + 1,
                    res.worst_mass_drift, opt.mass_tolerance);
      throw NumericalError(buf);
    }
    std::swap(cur, next);
  }
  res.f = cur[nt];
  return res;
}

/// Splits [0, t_end] into equal pieces below the guard horizon and chains
/// Picard solves. Increments and masses are concatenated across pieces.
inline PicardResult picard_solve_chained(const GridDensity& f0, double t_end, const PicardOptions& opt = {}) {
  if (t_end < opt.t_guard) return picard_solve_toy(f0, t_end, opt);
  const auto pieces = static_cast<std::size_t>(std::ceil(t_end / (0.9 * opt.t_guard)));
  const double dt = t_end / static_cast<double>(pieces);
  PicardResult total;
  total.f = f0;
  total.min_value = f0.min_value();
  for (std::size_t p = 0; p < pieces; ++p) {
    auto part = picard_solve_toy(total.f, dt, opt);
    total.f = std::move(part.f);
    total.increments.insert(total.increments.end(), part.increments.begin(), part.increments.end());
    total.mass.insert(total.mass.end(), part.mass.begin(), part.mass.end());
    total.worst_mass_drift = std::max(total.worst_mass_drift, part.worst_mass_drift);
    total.min_value = std::min(total.min_value, part.min_value);
  }
  return total;
}

}  // namespace kac
