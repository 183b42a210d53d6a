#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kac/errors.hpp"

namespace kac {

/// Master vector of an N-particle system: N velocities in R^d stored
/// row-major, plus the jump-process clock.
struct MasterState {
  std::size_t particles = 0;
  int dimension = 1;
  std::vector<double> velocities;
  double time = 0.0;
  std::uint64_t collision_count = 0;

  MasterState() = default;
  MasterState(std::size_t n, int d)
      : particles(n), dimension(d), velocities(n * static_cast<std::size_t>(d), 0.0) {}

  std::span<double> velocity(std::size_t i) {
    return {velocities.data() + i * static_cast<std::size_t>(dimension),
            static_cast<std::size_t>(dimension)};
  }
  std::span<const double> velocity(std::size_t i) const {
    return {velocities.data() + i * static_cast<std::size_t>(dimension),
            static_cast<std::size_t>(dimension)};
  }

  /// Total kinetic energy |V|^2.
  double energy() const {
    double e = 0.0;
    for (double x : velocities) e += x * x;
    return e;
  }

  bool finite() const {
    for (double x : velocities)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

}  // namespace kac
