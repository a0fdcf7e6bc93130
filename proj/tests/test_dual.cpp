#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "morozov/dual.hpp"
#include "morozov/errors.hpp"
#include "morozov/problems.hpp"
#include "oracles.hpp"

namespace morozov {
namespace {

Lagrangian scalar_lagrangian(double a, double g, double eps) {
  return Lagrangian(LinearOperator(Matrix::Constant(1, 1, a)), Vector::Constant(1, g),
                    Regularizer::identity(1), eps);
}

Lagrangian lagrangian_for(const InverseProblem& p, double c = 1.0) {
  return Lagrangian(p.a, p.g, p.j, (c * p.tau) * (c * p.tau));
}

TEST(Dual, ZeroMultiplier) {
  const auto lag = scalar_lagrangian(1.0, 2.0, 1.0);
  const auto ev = eval_dual(lag, 0.0);
  EXPECT_EQ(ev.d_value, 0.0);
  EXPECT_EQ(ev.d_prime, 4.0 - 1.0);
  EXPECT_FALSE(ev.solution.has_value());
  EXPECT_THROW(eval_dual(lag, -1.0), InvalidInput);
}

TEST(Dual, ScalarClosedForm) {
  const auto ev = eval_dual(scalar_lagrangian(1.0, 2.0, 1.0), 1.0);
  ASSERT_TRUE(ev.solution.has_value());
  EXPECT_NEAR(ev.solution->f_lambda[0], 1.0, 1e-15);
  EXPECT_NEAR(ev.d_prime, 0.0, 1e-15);
  EXPECT_NEAR(ev.d_value, 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(ev.d_prime, ev.solution->discrepancy_sq - 1.0);
  EXPECT_DOUBLE_EQ(ev.d_value, ev.solution->j_value + ev.lambda * ev.d_prime);
}

TEST(Dual, InfimumBoundAndWeakDuality) {
  const auto p = regime_fixture(Regime::interior, 1);
  const auto lag = lagrangian_for(p, 1.02);
  // f0 is feasible: ||A f0 - g|| = ||dg|| < 1.02 tau.
  ASSERT_LE(residual_norm_sq(p.a, p.f0, p.g), lag.epsilon());
  for (double lambda : log_grid(1e-3, 1e5, 30)) {
    const auto ev = eval_dual(lag, lambda);
    EXPECT_LE(ev.d_value, lagrangian_value(lag, p.f0, lambda) + 1e-12);
    EXPECT_LE(ev.d_value, p.j.evaluate(p.f0) + 1e-12);
  }
}

TEST(Dual, RegimeClassification) {
  const auto id = LinearOperator::identity(2);
  EXPECT_EQ(diagnose_regime(id, Vector{{2.0, 0.0}}, 1.0).regime, Regime::interior);
  EXPECT_EQ(diagnose_regime(id, Vector{{1.0, 0.0}}, 2.0).regime, Regime::noise_dominates);
  // dist(g, range) = 1 by construction: g = (1, 1), range = span(e1).
  const LinearOperator proj(Matrix{{1.0, 0.0}, {0.0, 0.0}});
  const auto d = diagnose_regime(proj, Vector{{1.0, 1.0}}, 0.5);
  EXPECT_NEAR(d.dist_to_range, 1.0, 1e-15);
  EXPECT_EQ(d.regime, Regime::too_optimistic);
  EXPECT_THROW(diagnose_regime(id, Vector::Ones(2), 0.0), InvalidInput);
}

TEST(Dual, RegimeTiesAreFailures) {
  EXPECT_EQ(classify_regime(0.5, 2.0, 2.0), Regime::noise_dominates);
  EXPECT_EQ(classify_regime(0.5, 2.0, 0.5), Regime::too_optimistic);
  EXPECT_EQ(classify_regime(0.5, 2.0, 1.0), Regime::interior);
  EXPECT_EQ(classify_regime(2.0, 2.0, 2.0), Regime::noise_dominates);
  RegimeDiagnosis d{0.5, 1.0, 3.0, Regime::noise_dominates};
  EXPECT_NE(describe_regime_failure(d).find("tau >= ||g||"), std::string::npos);
  d.regime = Regime::too_optimistic;
  EXPECT_NE(describe_regime_failure(d).find("tau <= dist(g, range A)"), std::string::npos);
}

TEST(Dual, ScalarMaximizerAllMethods) {
  const auto lag = scalar_lagrangian(1.0, 2.0, 1.0);
  for (Method m : {Method::bisection, Method::secant}) {
    const auto r = maximize_dual(lag, m);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.lambda_star, 1.0, 1e-8) << to_string(m);
    EXPECT_NEAR(r.alpha, 1.0, 1e-8);
    EXPECT_NEAR(r.f_star[0], 1.0, 1e-8);
    EXPECT_NEAR(r.discrepancy, 1.0, 1e-8);
    EXPECT_LE(std::abs(r.alpha * r.lambda_star - 1.0), std::numeric_limits<double>::epsilon());
  }
  MaximizeOptions ga;
  ga.rtol = 1e-4;
  ga.max_iter = 10000;
  const auto r = maximize_dual(lag, Method::gradient_ascent, ga);
  EXPECT_NEAR(r.lambda_star, 1.0, 1e-3);
  EXPECT_EQ(r.iterations.front().lambda, 0.0);
}

TEST(Dual, ScalarClosedFormGeneralCoefficients) {
  // Root of (1 + lambda a^2)^2 = g^2 / eps.
  struct Case { double a, g, eps; };
  for (const Case c : {Case{2.0, 3.0, 1.0}, Case{0.5, 10.0, 4.0}, Case{3.0, -1.0, 0.01}}) {
    const double expected = (std::abs(c.g) / std::sqrt(c.eps) - 1.0) / (c.a * c.a);
    const auto r = maximize_dual(scalar_lagrangian(c.a, c.g, c.eps), Method::bisection);
    EXPECT_NEAR(r.lambda_star, expected, 1e-7 * expected);
  }
}

TEST(Dual, IdentityComponentwise) {
  const Lagrangian lag(LinearOperator::identity(2), Vector{{2.0, 0.0}}, Regularizer::identity(2), 1.0);
  const auto r = maximize_dual(lag, Method::bisection);
  EXPECT_NEAR(r.lambda_star, 1.0, 1e-8);
  EXPECT_LT((r.f_star - Vector{{1.0, 0.0}}).norm(), 1e-8);
}

TEST(Dual, RandomDenseAgreesWithBruteForceGrid) {
  std::mt19937_64 rng(41);
  const Matrix a = *make_random_dense(20, 15, 3.0, 41).matrix();
  const Vector g = a * oracles::random_vector(rng, 15) + 0.05 * oracles::random_vector(rng, 20);
  // Pick tau strictly between dist(g, range A) and ||g||.
  const double dist = distance_to_range(LinearOperator(a), g);
  const double tau = dist + 0.3 * (g.norm() - dist);
  const Lagrangian lag(LinearOperator(a), g, Regularizer::identity(15), tau * tau);
  const auto r = maximize_dual(lag, Method::bisection);
  EXPECT_NEAR(residual_norm_sq(lag.forward(), r.f_star, g), tau * tau, 1e-8 * tau * tau);

  const auto grid = log_grid(1e-6, 1e9, 10000);
  std::vector<double> values;
  values.reserve(grid.size());
  const Matrix l = Matrix::Identity(15, 15);
  for (double lambda : grid) values.push_back(oracles::dual_value(a, l, g, tau * tau, lambda));
  const std::size_t best = oracles::argmax(values);
  const double cell = std::log(grid[1] / grid[0]);
  EXPECT_LE(std::abs(std::log(r.lambda_star / grid[best])), cell * (1.0 + 1e-9));
}

TEST(Dual, RegimePreconditionAndOverride) {
  const auto noisy = lagrangian_for(regime_fixture(Regime::noise_dominates, 2));
  try {
    maximize_dual(noisy, Method::bisection);
    FAIL() << "expected RegimeError";
  } catch (const RegimeError& e) {
    EXPECT_EQ(e.diagnosis().regime, Regime::noise_dominates);
    EXPECT_NE(std::string(e.what()).find("noise_dominates"), std::string::npos);
  }
  MaximizeOptions force;
  force.override_regime = true;
  EXPECT_THROW(maximize_dual(noisy, Method::bisection, force), BracketFailure);

  const auto optimistic = lagrangian_for(regime_fixture(Regime::too_optimistic, 2));
  EXPECT_THROW(maximize_dual(optimistic, Method::secant), RegimeError);
  force.lambda_max = 1e8;
  try {
    maximize_dual(optimistic, Method::bisection, force);
    FAIL() << "expected BracketFailure";
  } catch (const BracketFailure& e) {
    ASSERT_FALSE(e.trace().empty());
    for (const auto& t : e.trace()) EXPECT_GT(t.d_prime, 0.0);
  }
}

TEST(Dual, MaxIterExhaustionKeepsTrace) {
  const auto lag = lagrangian_for(regime_fixture(Regime::interior, 3), 1.02);
  MaximizeOptions opts;
  opts.max_iter = 5;
  try {
    maximize_dual(lag, Method::bisection, opts);
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergence& e) {
    EXPECT_EQ(e.partial().iterations.size(), 5u);
    EXPECT_FALSE(e.partial().converged);
  }
}

TEST(Dual, OptionValidation) {
  const auto lag = scalar_lagrangian(1.0, 2.0, 1.0);
  MaximizeOptions opts;
  opts.rtol = 0.0;
  EXPECT_THROW(maximize_dual(lag, Method::bisection, opts), InvalidInput);
  opts = {};
  opts.lambda_init = -1.0;
  EXPECT_THROW(maximize_dual(lag, Method::bisection, opts), InvalidInput);
  EXPECT_THROW(method_from_string("newton"), InvalidInput);
  EXPECT_EQ(method_from_string("gradient-ascent"), Method::gradient_ascent);
}

TEST(Dual, MethodsReachTheSamePrimal) {
  for (std::uint64_t seed : {4u, 5u, 6u}) {
    const auto lag = lagrangian_for(regime_fixture(Regime::interior, seed), 1.02);
    const auto bis = maximize_dual(lag, Method::bisection);
    const auto sec = maximize_dual(lag, Method::secant);
    EXPECT_LE((bis.f_star - sec.f_star).norm(), 1e-6 * (1.0 + bis.f_star.norm()));
    EXPECT_LT(sec.iterations.size(), bis.iterations.size());
  }
}

TEST(Dual, SmallLambdaStarIsBracketedByHalving) {
  // lambda* = (|g|/sqrt(eps) - 1) / a^2 = 1e-3 with a = 1, g = 1.001, eps = 1.
  const auto r = maximize_dual(scalar_lagrangian(1.0, 1.001, 1.0), Method::bisection);
  // The stop rule |D'| <= 1e-8 with |D''| near 2 pins lambda to about 5e-9.
  EXPECT_NEAR(r.lambda_star, 1e-3, 1e-8);
}

TEST(Dual, SweepShapes) {
  const auto grid = log_grid(1e-4, 1e8, 60);
  {
    const auto sweep = sweep_dual(lagrangian_for(regime_fixture(Regime::interior, 7), 1.02), grid);
    bool positive = false, negative = false;
    for (const auto& p : sweep) {
      ASSERT_TRUE(p.evaluation) << p.error;
      positive |= p.evaluation->d_prime > 0.0;
      negative |= p.evaluation->d_prime < 0.0;
    }
    EXPECT_TRUE(positive && negative);
    const auto second = second_differences(sweep);
    for (std::size_t i = 0; i < second.size(); ++i) {
      EXPECT_LE(second[i], 1e-9 * std::max(1.0, std::abs(sweep[i + 1].evaluation->d_value)));
    }
  }
  {
    const auto sweep = sweep_dual(lagrangian_for(regime_fixture(Regime::noise_dominates, 7)), grid);
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      EXPECT_LT(sweep[i].evaluation->d_prime, 0.0);
      if (i > 0) EXPECT_LE(sweep[i].evaluation->d_value, sweep[i - 1].evaluation->d_value);
    }
  }
  {
    const auto sweep = sweep_dual(lagrangian_for(regime_fixture(Regime::too_optimistic, 7)), grid);
    for (const auto& p : sweep) EXPECT_GT(p.evaluation->d_prime, 0.0);
  }
}

TEST(Dual, DerivativeIsNonincreasingAndMatchesFiniteDifferences) {
  const auto lag = lagrangian_for(regime_fixture(Regime::interior, 8), 1.02);
  const auto grid = log_grid(1e-2, 1e4, 25);
  double previous = std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    const auto ev = eval_dual(lag, lambda);
    EXPECT_LE(ev.d_prime, previous);
    previous = ev.d_prime;
    const double h = 1e-6 * lambda;
    const double fd = oracles::central_difference(
        [&](double x) { return eval_dual(lag, x).d_value; }, lambda, h);
    EXPECT_LE(std::abs(fd - ev.d_prime), 1e-5 * std::abs(ev.d_prime)) << "lambda " << lambda;
  }
}

TEST(Dual, SweepRecordsFailuresAndContinues) {
  const auto lag = scalar_lagrangian(1.0, 2.0, 1.0);
  const auto sweep = sweep_dual(lag, {1.0, 10.0, 1e13}, {}, 2);
  ASSERT_EQ(sweep.size(), 3u);
  EXPECT_TRUE(sweep[0].evaluation && sweep[1].evaluation);
  EXPECT_FALSE(sweep[2].evaluation);
  EXPECT_NE(sweep[2].error.find("lambda_max"), std::string::npos);
  EXPECT_THROW(sweep_dual(lag, {}), InvalidInput);
  EXPECT_THROW(sweep_dual(lag, {1.0, 1.0}), InvalidInput);
  EXPECT_THROW(sweep_dual(lag, {-1.0, 1.0}), InvalidInput);
}

TEST(Dual, SecondDifferenceHelper) {
  // D = -lambda^2 on a uniform grid: chord - D = h^2 at every interior point.
  std::vector<SweepPoint> sweep;
  for (int i = 1; i <= 5; ++i) {
    DualEvaluation ev;
    ev.lambda = i;
    ev.d_value = -double(i * i);
    sweep.push_back({ev.lambda, ev, ""});
  }
  for (double s : second_differences(sweep)) EXPECT_DOUBLE_EQ(s, -1.0);
}

TEST(Dual, VerifyScalarSolution) {
  const auto lag = scalar_lagrangian(1.0, 2.0, 1.0);
  const auto r = maximize_dual(lag, Method::bisection);
  EXPECT_TRUE(verify_morozov_solution(r, lag).passed());
}

TEST(Dual, VerifyDetectsCorruption) {
  const auto lag = lagrangian_for(regime_fixture(Regime::interior, 9), 1.02);
  const auto r = maximize_dual(lag, Method::bisection);
  ASSERT_TRUE(verify_morozov_solution(r, lag).passed());

  auto corrupted = r;
  std::mt19937_64 rng(9);
  corrupted.f_star += 1e-2 * oracles::random_vector(rng, r.f_star.size());
  const auto bad = verify_morozov_solution(corrupted, lag);
  EXPECT_FALSE(bad.optimality_ok);
  EXPECT_FALSE(bad.passed());

  auto doubled = r;
  doubled.lambda_star = 2.0 * r.lambda_star;
  doubled.f_star = solve_lagrange(lag, doubled.lambda_star).f_lambda;
  const auto shifted = verify_morozov_solution(doubled, lag);
  EXPECT_FALSE(shifted.discrepancy_ok);
  EXPECT_TRUE(shifted.optimality_ok);

  auto unconverged = r;
  unconverged.converged = false;
  EXPECT_THROW(verify_morozov_solution(unconverged, lag), InvalidInput);
}

TEST(Dual, IterativeInnerSolverSelectsSameParameter) {
  const auto lag = lagrangian_for(regime_fixture(Regime::interior, 10), 1.02);
  MaximizeOptions opts;
  opts.solve.solver = SolverKind::iterative;
  opts.solve.jacobi = true;
  const auto cg = maximize_dual(lag, Method::secant, opts);
  const auto direct = maximize_dual(lag, Method::secant);
  EXPECT_NEAR(cg.lambda_star, direct.lambda_star, 1e-6 * direct.lambda_star);
}

}  // namespace
}  // namespace morozov
