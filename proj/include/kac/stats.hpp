#pragma once

// Streaming estimators. All accumulators are mergeable; merging is
// associative up to floating-point reassociation, and callers merge in a
// fixed (replica) order so results are reproducible.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "kac/errors.hpp"

namespace kac {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  void add(const CompensatedSum& o) {
    add(o.sum_);
    add(o.comp_);
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;  // standard error of the mean
  std::size_t count = 0;
};

/// Mean / variance of a scalar stream. Sums are taken relative to the first
/// observed value, so a constant stream yields exactly zero variance.
class ScalarAccumulator {
 public:
  void add(double x) {
    if (n_ == 0) shift_ = x;
    const double y = x - shift_;
    s1_.add(y);
    s2_.add(y * y);
    ++n_;
  }

  void merge(const ScalarAccumulator& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double delta = o.shift_ - shift_;
    if (delta == 0.0) {
      s1_.add(o.s1_);
      s2_.add(o.s2_);
    } else {
      const double o1 = o.s1_.value();
      const double o2 = o.s2_.value();
      const double nd = static_cast<double>(o.n_);
      s1_.add(o1 + nd * delta);
      s2_.add(o2 + 2.0 * delta * o1 + nd * delta * delta);
    }
    n_ += o.n_;
  }

  std::size_t count() const { return n_; }

  double mean() const {
    if (n_ == 0) return 0.0;
    return shift_ + s1_.value() / static_cast<double>(n_);
  }

  /// Unbiased sample variance (0 for fewer than two samples).
  double variance() const {
    if (n_ < 2) return 0.0;
    const double n = static_cast<double>(n_);
    const double s1 = s1_.value();
    const double v = (s2_.value() - s1 * s1 / n) / (n - 1.0);
    return v > 0.0 ? v : 0.0;
  }

  double stderr_of_mean() const {
    if (n_ < 2) return 0.0;
    return std::sqrt(variance() / static_cast<double>(n_));
  }

  Estimate estimate() const { return {mean(), stderr_of_mean(), n_}; }

 private:
  double shift_ = 0.0;
  CompensatedSum s1_;
  CompensatedSum s2_;
  std::size_t n_ = 0;
};

/// Joint first and second moments of a pair (x, y), shifted like
/// ScalarAccumulator.
class PairAccumulator {
 public:
  void add(double x, double y) {
    if (n_ == 0) {
      kx_ = x;
      ky_ = y;
    }
    const double a = x - kx_;
    const double b = y - ky_;
    sx_.add(a);
    sy_.add(b);
    sxx_.add(a * a);
    syy_.add(b * b);
    sxy_.add(a * b);
    ++n_;
  }

  std::size_t count() const { return n_; }
  double mean_x() const { return n_ ? kx_ + sx_.value() / static_cast<double>(n_) : 0.0; }
  double mean_y() const { return n_ ? ky_ + sy_.value() / static_cast<double>(n_) : 0.0; }

  double var_x() const { return central(sxx_, sx_, sx_); }
  double var_y() const { return central(syy_, sy_, sy_); }
  double cov_xy() const { return central(sxy_, sx_, sy_); }

  /// U-statistic estimate of E[y]^2 that is unbiased for iid replicas.
  double unbiased_mean_y_squared() const {
    if (n_ < 2) return mean_y() * mean_y();
    const double n = static_cast<double>(n_);
    const double s = sy_.value();
    const double u = (s * s - syy_.value()) / (n * (n - 1.0));
    return ky_ * ky_ + 2.0 * ky_ * s / n + u;
  }

 private:
  double central(const CompensatedSum& sab, const CompensatedSum& sa,
                 const CompensatedSum& sb) const {
    if (n_ < 2) return 0.0;
    const double n = static_cast<double>(n_);
    return (sab.value() - sa.value() * sb.value() / n) / (n - 1.0);
  }

  double kx_ = 0.0, ky_ = 0.0;
  CompensatedSum sx_, sy_, sxx_, syy_, sxy_;
  std::size_t n_ = 0;
};

/// Pooled per-coordinate moments of order 1..4 and the d x d second
/// cross-moment matrix of a velocity sample.
class MomentAccumulator {
 public:
  MomentAccumulator() = default;
  explicit MomentAccumulator(int dimension)
      : d_(dimension),
        power_(static_cast<std::size_t>(4 * dimension)),
        cross_(static_cast<std::size_t>(dimension * dimension)) {}

  int dimension() const { return d_; }
  std::size_t count() const { return n_; }

  void add(std::span<const double> v) {
    require(static_cast<int>(v.size()) == d_, "MomentAccumulator: dimension mismatch");
    for (int j = 0; j < d_; ++j) {
      double p = 1.0;
      for (int k = 0; k < 4; ++k) {
        p *= v[j];
        power_[static_cast<std::size_t>(4 * j + k)].add(p);
      }
      for (int l = 0; l < d_; ++l) cross_[static_cast<std::size_t>(j * d_ + l)].add(v[j] * v[l]);
    }
    ++n_;
  }

  void merge(const MomentAccumulator& o) {
    if (o.n_ == 0) return;
    if (d_ == 0) {
      *this = o;
      return;
    }
    require(o.d_ == d_, "MomentAccumulator: dimension mismatch in merge");
    for (std::size_t i = 0; i < power_.size(); ++i) power_[i].add(o.power_[i]);
    for (std::size_t i = 0; i < cross_.size(); ++i) cross_[i].add(o.cross_[i]);
    n_ += o.n_;
  }

  /// E[v_j^order], order in 1..4.
  double moment(int coordinate, int order) const {
    require(order >= 1 && order <= 4, "MomentAccumulator: order must be in 1..4");
    if (n_ == 0) return 0.0;
    return power_[static_cast<std::size_t>(4 * coordinate + order - 1)].value() /
           static_cast<double>(n_);
  }

  /// E[|v|^2 ... ] style isotropic moment: mean over coordinates of E[v_j^order].
  double coordinate_averaged(int order) const {
    double s = 0.0;
    for (int j = 0; j < d_; ++j) s += moment(j, order);
    return d_ ? s / d_ : 0.0;
  }

  double cross(int i, int j) const {
    if (n_ == 0) return 0.0;
    return cross_[static_cast<std::size_t>(i * d_ + j)].value() / static_cast<double>(n_);
  }

 private:
  int d_ = 0;
  std::vector<CompensatedSum> power_;
  std::vector<CompensatedSum> cross_;
  std::size_t n_ = 0;
};

/// Ordinary least squares y = a + b x. Returns slope, intercept and the
/// standard error of the slope.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return f;
}

}  // namespace kac
