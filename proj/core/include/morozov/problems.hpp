#pragma once

#include <cstdint>
#include <optional>

#include "morozov/dual.hpp"
#include "morozov/linops.hpp"
#include "morozov/regularizers.hpp"

namespace morozov {

/// A synthetic inverse problem g = A f0 + δg with exactly known noise norm.
struct InverseProblem {
  LinearOperator a;
  Vector g;
  Vector g0;  ///< A f0; empty when unknown
  Vector f0;  ///< ground truth; empty when unknown
  double delta_g_norm = 0.0;
  /// Noise estimate handed to the solver. Zero for clean data.
  double tau = 0.0;
  double noise_level = 0.0;
  double tau_accuracy = 1.0;
  Regularizer j;
  std::uint64_t seed = 0;
  /// Regime the problem was built for, if any.
  std::optional<Regime> regime;
};

/// Normalized Gaussian kernel exp(−k²/(2w²)) on k = −half..half, scaled so
/// the full 2n−1 tap kernel sums to one. Width ≤ 1e−8 gives a delta.
Vector gaussian_kernel(double kernel_width, Eigen::Index half);

/// Dense n x n Gaussian blur, A_ij = h_{i−j} with h = gaussian_kernel(w, n−1).
/// Symmetric with row sums ≤ 1; severely ill-conditioned once w spans a few
/// samples.
LinearOperator make_deconvolution(Eigen::Index n, double kernel_width);

/// Matrix-free twin of make_deconvolution.
LinearOperator make_deconvolution_matrix_free(Eigen::Index n, double kernel_width);

/// H_ij = 1/(i + j − 1), 1-based, for 2 ≤ n ≤ 14.
LinearOperator make_hilbert(Eigen::Index n);

/// U·diag(σ)·V^T with Haar-random orthogonal factors and
/// σ_i = 10^(−decades·i/(k−1)), k = min(rows, cols).
LinearOperator make_random_dense(Eigen::Index rows, Eigen::Index cols, double decades,
                                 std::uint64_t seed);

/// Smooth test object on n samples: a sine arch plus a Gaussian bump.
Vector smooth_signal(Eigen::Index n);

/// Draws δg ~ N(0, I), rescales it to ‖δg‖ = noise_level·‖A f0‖ exactly and
/// sets τ = tau_accuracy·‖δg‖. Deterministic in `seed` (see NormalStream).
/// The regularizer defaults to the identity.
InverseProblem synthesize(const LinearOperator& a, const Vector& f0, double noise_level,
                          double tau_accuracy, std::uint64_t seed,
                          std::optional<Regularizer> j = std::nullopt);

/// Small (n = 32) problem whose regime is certified by diagnose_regime.
///   interior         Gaussian blur, 5% noise, exact τ
///   noise_dominates  same data, τ = 2‖g‖
///   too_optimistic   blur with every fourth row masked out, τ = dist/2
InverseProblem regime_fixture(Regime target, std::uint64_t seed);

}  // namespace morozov
