#include "morozov/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "morozov/random.hpp"

namespace morozov {

Vector gaussian_kernel(double kernel_width, Eigen::Index half) {
  if (!(kernel_width > 0.0)) throw InvalidInput("gaussian_kernel: width must be positive");
  if (half < 0) throw InvalidInput("gaussian_kernel: half-length must be nonnegative");
  Vector h(2 * half + 1);
  for (Eigen::Index k = -half; k <= half; ++k) {
    const double x = static_cast<double>(k) / kernel_width;
    h[k + half] = std::exp(-0.5 * x * x);
  }
  return h / h.sum();
}

LinearOperator make_deconvolution(Eigen::Index n, double kernel_width) {
  if (n < 4) throw InvalidInput("make_deconvolution: n must be at least 4");
  if (!(kernel_width > 0.0)) throw InvalidInput("make_deconvolution: kernel_width must be positive");
  const Vector h = gaussian_kernel(kernel_width, n - 1);
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = h[j - i + n - 1];
  }
  return LinearOperator(std::move(a), "deconvolution");
}

LinearOperator make_deconvolution_matrix_free(Eigen::Index n, double kernel_width) {
  if (n < 4) throw InvalidInput("make_deconvolution: n must be at least 4");
  return convolution(gaussian_kernel(kernel_width, n - 1), n);
}

LinearOperator make_hilbert(Eigen::Index n) {
  if (n < 2 || n > 14) throw InvalidInput("make_hilbert: n must lie in [2, 14]");
  Matrix h(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) h(i, j) = 1.0 / static_cast<double>(i + j + 1);
  }
  return LinearOperator(std::move(h), "hilbert");
}

LinearOperator make_random_dense(Eigen::Index rows, Eigen::Index cols, double decades,
                                 std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw InvalidInput("make_random_dense: sizes must be positive");
  if (!(decades >= 0.0)) throw InvalidInput("make_random_dense: decades must be nonnegative");
  NormalStream rng(seed);
  const Eigen::Index k = std::min(rows, cols);
  const Matrix u = Eigen::HouseholderQR<Matrix>(rng.matrix(rows, rows)).householderQ();
  const Matrix v = Eigen::HouseholderQR<Matrix>(rng.matrix(cols, cols)).householderQ();
  Matrix s = Matrix::Zero(rows, cols);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double t = k > 1 ? static_cast<double>(i) / static_cast<double>(k - 1) : 0.0;
    s(i, i) = std::pow(10.0, -decades * t);
  }
  return LinearOperator(Matrix(u * s * v.transpose()), "random_dense");
}

Vector smooth_signal(Eigen::Index n) {
  Vector f(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double bump = (t - 0.3) / 0.08;
    f[i] = std::sin(std::numbers::pi * t) + 0.6 * std::exp(-0.5 * bump * bump);
  }
  return f;
}

InverseProblem synthesize(const LinearOperator& a, const Vector& f0, double noise_level,
                          double tau_accuracy, std::uint64_t seed, std::optional<Regularizer> j) {
  if (!(noise_level >= 0.0)) throw InvalidInput("synthesize: noise_level must be nonnegative");
  if (!(tau_accuracy > 0.0)) throw InvalidInput("synthesize: tau_accuracy must be positive");
  require_size(f0.size(), a.cols(), "synthesize");
  Regularizer reg = j ? *j : Regularizer::identity(a.cols());
  require_size(reg.dim(), a.cols(), "synthesize (regularizer)");

  const Vector g0 = a.apply(f0);
  const double g0_norm = g0.norm();
  if (noise_level > 0.0 && g0_norm == 0.0) {
    throw InvalidInput("synthesize: relative noise needs nonzero clean data A f0");
  }
  Vector noise = Vector::Zero(g0.size());
  if (noise_level > 0.0) {
    NormalStream rng(seed);
    noise = rng.vector(g0.size());
    noise *= noise_level * g0_norm / noise.norm();
  }
  const double delta = noise_level * g0_norm;
  return InverseProblem{a,    g0 + noise,   g0,           f0,          delta,
                        tau_accuracy * delta, noise_level, tau_accuracy, std::move(reg),
                        seed, std::nullopt};
}

InverseProblem regime_fixture(Regime target, std::uint64_t seed) {
  constexpr Eigen::Index n = 32;
  constexpr double noise = 0.05;
  const Vector f0 = smooth_signal(n);
  InverseProblem p = [&] {
    if (target == Regime::too_optimistic) {
      Matrix blur = *make_deconvolution(n, 2.0).matrix();
      for (Eigen::Index i = 3; i < n; i += 4) blur.row(i).setZero();
      InverseProblem q =
          synthesize(LinearOperator(std::move(blur), "masked_deconvolution"), f0, noise, 1.0, seed);
      q.tau = 0.5 * distance_to_range(q.a, q.g);
      return q;
    }
    InverseProblem q = synthesize(make_deconvolution(n, 2.0), f0, noise, 1.0, seed);
    if (target == Regime::noise_dominates) q.tau = 2.0 * q.g.norm();
    return q;
  }();
  p.tau_accuracy = p.delta_g_norm > 0.0 ? p.tau / p.delta_g_norm : 1.0;
  p.regime = target;
  const RegimeDiagnosis d = diagnose_regime(p.a, p.g, p.tau);
  if (d.regime != target) {
    throw std::logic_error("regime_fixture: constructed problem landed in regime " +
                           std::string(to_string(d.regime)));
  }
  return p;
}

}  // namespace morozov
