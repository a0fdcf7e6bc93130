#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "morozov/linops.hpp"

namespace morozov {

/// Standard normal draws with a fully specified algorithm: std::mt19937_64
/// (bit-exact across standard libraries) feeds 53-bit uniforms in (0, 1)
/// into the Box-Muller transform, emitting the cosine branch first and
/// then the sine branch. std::normal_distribution is avoided because its
/// algorithm is implementation-defined.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Vector vector(Eigen::Index n) {
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = next();
    return out;
  }

  Matrix matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = next();
    }
    return out;
  }

  /// Uniform in the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace morozov
