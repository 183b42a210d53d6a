#pragma once

// Bounded test functions phi_s(v_1, ..., v_s) = prod_i g_i(v_i), each g_i a
// per-particle primitive with |g_i| <= 1.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kac/errors.hpp"

namespace kac {

struct Primitive {
  enum class Kind { Cosine, Tanh, Box };

  Kind kind = Kind::Cosine;
  std::vector<double> xi{0.0};  // cosine: wave vector (length d, or 1 = same value per coordinate)
  double a = 1.0;               // tanh: prod_j tanh(a v_j)
  double lower = -1.0;          // box: prod_j 1[lower <= v_j <= upper]
  double upper = 1.0;

  static Primitive cosine(double xi) { return {Kind::Cosine, {xi}}; }
  static Primitive cosine(std::vector<double> xi) { return {Kind::Cosine, std::move(xi)}; }
  static Primitive tanh(double a) {
    Primitive p;
    p.kind = Kind::Tanh;
    p.a = a;
    return p;
  }
  static Primitive box(double lower, double upper) {
    Primitive p;
    p.kind = Kind::Box;
    p.lower = lower;
    p.upper = upper;
    return p;
  }

  double operator()(std::span<const double> v) const {
    switch (kind) {
      case Kind::Cosine: {
        double phase = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) phase += (xi.size() == 1 ? xi[0] : xi[j]) * v[j];
        return std::cos(phase);
      }
      case Kind::Tanh: {
        double p = 1.0;
        for (double x : v) p *= std::tanh(a * x);
        return p;
      }
      case Kind::Box: {
        for (double x : v)
          if (!(x >= lower && x <= upper)) return 0.0;
        return 1.0;
      }
    }
    return 0.0;
  }

  /// True when the primitive is identically one (cosine with zero wave vector).
  bool is_constant_one() const {
    if (kind != Kind::Cosine) return false;
    for (double x : xi)
      if (x != 0.0) return false;
    return true;
  }

  std::string describe() const {
    switch (kind) {
      case Kind::Cosine: {
        std::string s = "cos(";
        for (std::size_t i = 0; i < xi.size(); ++i) s += (i ? "," : "") + std::to_string(xi[i]);
        return s + ")";
      }
      case Kind::Tanh: return "tanh(" + std::to_string(a) + ")";
      case Kind::Box: return "box(" + std::to_string(lower) + "," + std::to_string(upper) + ")";
    }
    return "?";
  }

  friend bool operator==(const Primitive&, const Primitive&) = default;
};

struct ObservableSpec {
  std::string id;
  std::vector<Primitive> factors;

  std::size_t order() const { return factors.size(); }

  /// phi_s evaluated on s consecutive velocities (s d reals).
  double operator()(std::span<const double> velocities, int d) const {
    const auto dd = static_cast<std::size_t>(d);
    double p = 1.0;
    for (std::size_t i = 0; i < factors.size(); ++i) p *= factors[i](velocities.subspan(i * dd, dd));
    return p;
  }

  /// phi_s evaluated on the particles at `slots` of a flat N x d array.
  double at(std::span<const double> all, int d, std::span<const std::size_t> slots) const {
    const auto dd = static_cast<std::size_t>(d);
    double p = 1.0;
    for (std::size_t i = 0; i < factors.size(); ++i)
      p *= factors[i](all.subspan(slots[i] * dd, dd));
    return p;
  }

  /// phi_s = g tensored s times.
  static ObservableSpec tensor_power(std::string id, const Primitive& g, std::size_t s) {
    return {std::move(id), std::vector<Primitive>(s, g)};
  }
};

inline void validate(const ObservableSpec& o, int d) {
  require(!o.factors.empty(), "observable '" + o.id + "' needs at least one factor");
  for (const auto& f : o.factors) {
    if (f.kind == Primitive::Kind::Cosine)
      require(f.xi.size() == 1 || f.xi.size() == static_cast<std::size_t>(d),
              "observable '" + o.id + "': cosine wave vector must have length 1 or d");
    if (f.kind == Primitive::Kind::Box)
      require(f.lower <= f.upper, "observable '" + o.id + "': box needs lower <= upper");
    if (f.kind == Primitive::Kind::Tanh)
      require(std::isfinite(f.a), "observable '" + o.id + "': tanh scale must be finite");
  }
}

}  // namespace kac
