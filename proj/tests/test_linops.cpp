#include <gtest/gtest.h>

#include <random>

#include "morozov/errors.hpp"
#include "morozov/linops.hpp"
#include "morozov/problems.hpp"
#include "morozov/regularizers.hpp"
#include "oracles.hpp"

namespace morozov {
namespace {

// <A f, y> - <f, A^* y> relative to |<A f, y>| + |<f, A^* y>|.
double worst_adjoint_error(const LinearOperator& op, int probes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int k = 0; k < probes; ++k) {
    const Vector f = oracles::random_vector(rng, op.cols());
    const Vector y = oracles::random_vector(rng, op.rows());
    const double lhs = op.apply(f).dot(y);
    const double rhs = f.dot(op.apply_adjoint(y));
    const double scale = op.apply(f).norm() * y.norm() + f.norm() * op.apply_adjoint(y).norm();
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

TEST(Linops, IdentityApply) {
  const auto id = LinearOperator::identity(2);
  EXPECT_EQ(id.apply(Vector{{1.0, 2.0}}), (Vector{{1.0, 2.0}}));
  EXPECT_EQ(id.apply_adjoint(Vector{{5.0, 6.0}}), (Vector{{5.0, 6.0}}));
  EXPECT_EQ(id.gram_apply(Vector{{1.0, -1.0}}), (Vector{{1.0, -1.0}}));
}

TEST(Linops, CoordinateProjection) {
  const LinearOperator p(Matrix{{1.0, 0.0}, {0.0, 0.0}});
  EXPECT_EQ(p.apply(Vector{{3.0, 4.0}}), (Vector{{3.0, 0.0}}));
}

TEST(Linops, AdjointIsTransposeAction) {
  const Matrix m{{1.0, 2.0}, {3.0, 4.0}};
  const LinearOperator op(m);
  // Oracle: explicit transpose times the vector, written out by hand.
  const Vector y{{1.0, 0.0}};
  Vector expected(2);
  for (int j = 0; j < 2; ++j) expected[j] = m(0, j) * y[0] + m(1, j) * y[1];
  EXPECT_EQ(op.apply_adjoint(y), expected);
  EXPECT_EQ(expected, (Vector{{1.0, 2.0}}));
}

TEST(Linops, GramApplyMatchesExplicitProduct) {
  const Matrix m{{2.0, 0.0}, {0.0, 0.0}};
  const Matrix ata = m.transpose() * m;
  const Vector f{{1.0, 1.0}};
  EXPECT_EQ(LinearOperator(m).gram_apply(f), ata * f);
  EXPECT_EQ(ata * f, (Vector{{4.0, 0.0}}));
}

TEST(Linops, DimensionMismatchRejected) {
  const LinearOperator op(Matrix::Ones(3, 2));
  EXPECT_THROW(op.apply(Vector::Ones(3)), InvalidInput);
  EXPECT_THROW(op.apply_adjoint(Vector::Ones(2)), InvalidInput);
  EXPECT_THROW(op.gram_apply(Vector::Ones(3)), InvalidInput);
  EXPECT_THROW(residual_norm_sq(op, Vector::Ones(2), Vector::Ones(2)), InvalidInput);
  EXPECT_THROW(LinearOperator(Matrix(0, 3)), InvalidInput);
}

TEST(Linops, GaussianBlurOfDeltaIsKernelRow) {
  const Eigen::Index n = 15;
  const Vector kernel = gaussian_kernel(2.0, n - 1);
  const auto blur = make_deconvolution_matrix_free(n, 2.0);
  Vector delta = Vector::Zero(n);
  delta[6] = 1.0;
  const Vector out = blur.apply(delta);
  const Vector expected = oracles::direct_convolution(kernel, delta);
  EXPECT_LT((out - expected).norm(), 1e-15);
  // Response to the delta at index 6 is the centred kernel shifted there.
  for (Eigen::Index i = 0; i < n; ++i) EXPECT_DOUBLE_EQ(out[i], kernel[6 - i + n - 1]);
}

TEST(Linops, MatrixFreeConvolutionMatchesDirectSumOnRandomInput) {
  std::mt19937_64 rng(11);
  const Vector kernel = oracles::random_vector(rng, 7);
  const auto conv = convolution(kernel, 20);
  const Vector x = oracles::random_vector(rng, 20);
  EXPECT_LT((conv.apply(x) - oracles::direct_convolution(kernel, x)).norm(), 1e-13);
  EXPECT_EQ(conv.to_dense().rows(), 20);
}

TEST(Linops, ConvolutionRejectsEvenKernel) {
  EXPECT_THROW(convolution(Vector::Ones(4), 10), InvalidInput);
}

TEST(Linops, AdjointConsistencyEveryShippedOperator) {
  std::mt19937_64 rng(3);
  const LinearOperator random_op(oracles::random_matrix(rng, 8, 5));
  const std::vector<LinearOperator> ops = {
      LinearOperator::identity(6),
      random_op,
      make_deconvolution(24, 2.5),
      make_deconvolution_matrix_free(24, 2.5),
      make_hilbert(9),
      make_random_dense(12, 7, 4.0, 5),
      Regularizer::first_difference(10).seminorm_operator(),
      convolution(oracles::random_vector(rng, 5), 12),
      compose(random_op, make_deconvolution_matrix_free(5, 1.0)),
      compose(random_op, LinearOperator::identity(5)),
  };
  for (const auto& op : ops) {
    EXPECT_LE(worst_adjoint_error(op, 100, 17), 1e-10) << op.name();
  }
}

TEST(Linops, GramEqualsAdjointOfApply) {
  std::mt19937_64 rng(4);
  const LinearOperator dense(oracles::random_matrix(rng, 8, 5));
  const auto mf = make_deconvolution_matrix_free(9, 1.5);
  for (int k = 0; k < 100; ++k) {
    const Vector f = oracles::random_vector(rng, 5);
    const Vector direct = dense.apply_adjoint(dense.apply(f));
    EXPECT_LE((dense.gram_apply(f) - direct).norm(), 1e-12 * direct.norm());
    EXPECT_GE(dense.gram_apply(f).dot(f), 0.0);
    const Vector h = oracles::random_vector(rng, 9);
    EXPECT_GE(mf.gram_apply(h).dot(h), 0.0);
  }
}

TEST(Linops, LinearityOnRandomProbes) {
  std::mt19937_64 rng(5);
  const auto op = make_deconvolution_matrix_free(16, 2.0);
  for (int k = 0; k < 20; ++k) {
    const Vector x = oracles::random_vector(rng, 16);
    const Vector y = oracles::random_vector(rng, 16);
    const double a = 1.7, b = -0.3;
    const Vector lhs = op.apply(a * x + b * y);
    const Vector rhs = a * op.apply(x) + b * op.apply(y);
    EXPECT_LE((lhs - rhs).norm(), 1e-14 * (1.0 + rhs.norm()));
  }
}

TEST(Linops, ResidualNormSq) {
  const auto id = LinearOperator::identity(2);
  EXPECT_DOUBLE_EQ(residual_norm_sq(id, Vector::Zero(2), Vector{{3.0, 4.0}}), 25.0);
  EXPECT_DOUBLE_EQ(residual_norm_sq(id, Vector{{3.0, 4.0}}, Vector{{3.0, 4.0}}), 0.0);

  std::mt19937_64 rng(6);
  const Matrix m = oracles::random_matrix(rng, 9, 6);
  const Vector f = oracles::random_vector(rng, 6);
  const Vector g = oracles::random_vector(rng, 9);
  const double expected = oracles::direct_residual_sq(m, f, g);
  EXPECT_NEAR(residual_norm_sq(LinearOperator(m), f, g), expected, 1e-12 * expected);
}

TEST(Linops, DistanceToRangeBasicCases) {
  EXPECT_NEAR(distance_to_range(LinearOperator::identity(3), Vector{{1.0, -2.0, 5.0}}), 0.0,
              1e-14);
  EXPECT_NEAR(distance_to_range(LinearOperator(Matrix{{1.0, 0.0}, {0.0, 0.0}}), Vector{{1.0, 1.0}}),
              1.0, 1e-15);
  EXPECT_THROW(distance_to_range(LinearOperator::identity(2), Vector::Ones(2), 0.0), InvalidInput);
}

TEST(Linops, DistanceToRangeRankDeficientMatchesProjectionOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix basis = oracles::random_matrix(rng, 6, 2);
    const Matrix a = basis * oracles::random_matrix(rng, 2, 4);  // 6x4, rank 2
    const Vector g = oracles::random_vector(rng, 6);
    const double expected = oracles::projection_distance(basis, g);
    EXPECT_NEAR(distance_to_range(LinearOperator(a), g), expected, 1e-8);
    // Matrix-free route via CGLS.
    const LinearOperator mf({4, 6}, [a](const Vector& f) -> Vector { return a * f; },
                            [a](const Vector& y) -> Vector { return a.transpose() * y; });
    EXPECT_NEAR(distance_to_range(mf, g, 1e-12), expected, 1e-8);
  }
}

TEST(Linops, DistanceNeverExceedsCandidateResidual) {
  std::mt19937_64 rng(8);
  const Matrix a = oracles::random_matrix(rng, 10, 3);
  const Vector g = oracles::random_vector(rng, 10);
  const double dist = distance_to_range(LinearOperator(a), g);
  for (int k = 0; k < 50; ++k) {
    const Vector f = oracles::random_vector(rng, 3);
    EXPECT_LE(dist, (a * f - g).norm() + 1e-12);
  }
}

TEST(Linops, CglsIterationCapRaisesWithBestValue) {
  // 10*dim_f iterations cannot reach 1e-300 relative accuracy.
  const auto blur = make_deconvolution_matrix_free(8, 3.0);
  try {
    distance_to_range(blur, Vector::LinSpaced(8, -1.0, 2.0), 1e-300);
    FAIL() << "expected ConvergenceFailure";
  } catch (const ConvergenceFailure& e) {
    EXPECT_GE(e.best_value(), 0.0);
    EXPECT_LT(e.best_value(), Vector::LinSpaced(8, -1.0, 2.0).norm());
  }
}

TEST(Linops, DensifyAndCompose) {
  const auto mf = make_deconvolution_matrix_free(6, 1.0);
  const auto dense = densify(mf);
  EXPECT_TRUE(dense.is_dense());
  EXPECT_LT((*dense.matrix() - *make_deconvolution(6, 1.0).matrix()).norm(), 1e-15);
  const auto twice = compose(dense, dense);
  EXPECT_LT((*twice.matrix() - *dense.matrix() * *dense.matrix()).norm(), 1e-15);
  EXPECT_THROW(compose(LinearOperator(Matrix::Ones(2, 3)), LinearOperator(Matrix::Ones(2, 3))),
               InvalidInput);
}

}  // namespace
}  // namespace morozov
