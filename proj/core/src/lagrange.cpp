#include "morozov/lagrange.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "morozov/errors.hpp"

namespace morozov {

std::string_view to_string(SolverKind kind) {
  return kind == SolverKind::direct ? "direct" : "iterative";
}

struct Lagrangian::Impl {
  LinearOperator a;
  Vector g;
  Regularizer j;
  double epsilon;
  double g_norm_sq = 0.0;
  Vector atg{};
  double atg_norm = 0.0;
  // Dense path only.
  std::optional<Matrix> ata{};
  std::optional<Matrix> ltl{};
  std::optional<AssumptionReport> report{};
};

Lagrangian::Lagrangian(LinearOperator a, Vector g, Regularizer j, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidInput("Lagrangian: epsilon must be positive and finite");
  }
  require_size(g.size(), a.rows(), "Lagrangian (data)");
  require_size(j.dim(), a.cols(), "Lagrangian (regularizer)");
  auto impl = std::make_shared<Impl>(Impl{.a = std::move(a), .g = std::move(g), .j = std::move(j), .epsilon = epsilon});
  impl->g_norm_sq = impl->g.squaredNorm();
  impl->atg = impl->a.apply_adjoint(impl->g);
  impl->atg_norm = impl->atg.norm();
  const LinearOperator& l = impl->j.seminorm_operator();
  if (impl->a.is_dense() && l.is_dense()) {
    const Matrix& am = *impl->a.matrix();
    const Matrix& lm = *l.matrix();
    impl->ata = Matrix(am.transpose() * am);
    impl->ltl = Matrix(lm.transpose() * lm);
    impl->report = check_assumptions(impl->j, impl->a);
  }
  impl_ = std::move(impl);
}

const LinearOperator& Lagrangian::forward() const noexcept { return impl_->a; }
const Vector& Lagrangian::data() const noexcept { return impl_->g; }
const Regularizer& Lagrangian::regularizer() const noexcept { return impl_->j; }
double Lagrangian::epsilon() const noexcept { return impl_->epsilon; }
double Lagrangian::data_norm_sq() const noexcept { return impl_->g_norm_sq; }

const std::optional<AssumptionReport>& Lagrangian::assumptions() const noexcept {
  return impl_->report;
}

double Lagrangian::value(const Vector& f, double lambda) const {
  if (!(lambda >= 0.0)) throw InvalidInput("lagrangian_value: lambda must be nonnegative");
  const double j = impl_->j.evaluate(f);
  if (lambda == 0.0) return j;
  return j + lambda * (residual_norm_sq(impl_->a, f, impl_->g) - impl_->epsilon);
}

double Lagrangian::optimality_residual(const Vector& f, double lambda) const {
  const Vector grad =
      impl_->j.gradient(f) + 2.0 * lambda * (impl_->a.gram_apply(f) - impl_->atg);
  return grad.norm();
}

double Lagrangian::optimality_bound(double lambda) const {
  return 1e-8 * (1.0 + 2.0 * lambda * impl_->atg_norm);
}

namespace {

// M = L^*L + λA^*A, assembled from cached Gram matrices when available.
struct System {
  const LinearOperator& a;
  const LinearOperator& l;
  const std::optional<Matrix>& ata;
  const std::optional<Matrix>& ltl;
  double lambda;

  Vector apply(const Vector& f) const { return l.gram_apply(f) + lambda * a.gram_apply(f); }

  Matrix assemble() const {
    if (ata) return *ltl + lambda * *ata;
    const Matrix am = a.to_dense();
    const Matrix lm = l.to_dense();
    return lm.transpose() * lm + lambda * am.transpose() * am;
  }

  Vector diagonal() const {
    if (ata) return ltl->diagonal() + lambda * ata->diagonal();
    const Matrix am = a.to_dense();
    const Matrix lm = l.to_dense();
    return lm.colwise().squaredNorm().transpose() + lambda * am.colwise().squaredNorm().transpose();
  }
};

}  // namespace

LagrangeSolution Lagrangian::solve(double lambda, const SolveOptions& options) const {
  if (!(lambda > 0.0)) throw InvalidInput("solve_lagrange: lambda must be positive");
  if (lambda > kLambdaMax) {
    throw InvalidInput("solve_lagrange: lambda " + std::to_string(lambda) +
                       " exceeds lambda_max = 1e12");
  }
  if (!(options.tol > 0.0)) throw InvalidInput("solve_lagrange: tol must be positive");
  if (impl_->report && !impl_->report->strictly_convex_along_kernel) {
    throw AssumptionViolation(
        "solve_lagrange: ker L and ker A intersect (dimension " +
        std::to_string(impl_->report->kernel_intersection_dim) +
        "); the Lagrange problem has no unique minimizer");
  }

  const Eigen::Index n = impl_->a.cols();
  const System system{impl_->a, impl_->j.seminorm_operator(), impl_->ata, impl_->ltl, lambda};
  const Vector rhs = lambda * impl_->atg;
  const double rhs_norm = rhs.norm();

  LagrangeSolution sol;
  sol.lambda = lambda;
  sol.stats.method = options.solver;

  if (options.solver == SolverKind::direct) {
    const Matrix m = system.assemble();
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) {
      throw AssumptionViolation(
          "solve_lagrange: L^*L + lambda A^*A is not positive definite");
    }
    sol.f_lambda = llt.solve(rhs);
    sol.stats.factorized = true;
    // Two rounds of iterative refinement recover accuracy lost to
    // conditioning at large lambda.
    for (int round = 0; round < 2; ++round) {
      if (optimality_residual(sol.f_lambda, lambda) <= optimality_bound(lambda)) break;
      const Vector r = rhs - m * sol.f_lambda;
      sol.f_lambda += llt.solve(r);
      ++sol.stats.iterations;
    }
  } else {
    const Eigen::Index cap = 10 * n;
    Vector precond = Vector::Ones(n);
    if (options.jacobi) {
      const Vector diag = system.diagonal();
      for (Eigen::Index i = 0; i < n; ++i) {
        precond[i] = diag[i] > 0.0 ? 1.0 / diag[i] : 1.0;
      }
    }
    Vector f = Vector::Zero(n);
    if (rhs_norm > 0.0) {
      Vector r = rhs;
      Vector z = precond.cwiseProduct(r);
      Vector p = z;
      double rz = r.dot(z);
      bool converged = false;
      Eigen::Index it = 0;
      for (; it < cap; ++it) {
        const Vector mp = system.apply(p);
        const double pmp = p.dot(mp);
        if (!(pmp > 0.0)) {
          throw AssumptionViolation(
              "solve_lagrange: L^*L + lambda A^*A is not positive definite");
        }
        const double step = rz / pmp;
        f += step * p;
        r -= step * mp;
        if (r.norm() <= options.tol * rhs_norm) {
          // Confirm with the true residual; recursive residuals drift.
          r = rhs - system.apply(f);
          if (r.norm() <= options.tol * rhs_norm) {
            converged = true;
            ++it;
            break;
          }
        }
        z = precond.cwiseProduct(r);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
      }
      sol.stats.iterations = it;
      if (!converged) {
        throw ConvergenceFailure("solve_lagrange: conjugate gradients did not reach tol within " +
                                     std::to_string(cap) + " iterations",
                                 (rhs - system.apply(f)).norm() / rhs_norm);
      }
    }
    sol.f_lambda = std::move(f);
  }

  sol.stats.relative_residual =
      rhs_norm > 0.0 ? (rhs - system.apply(sol.f_lambda)).norm() / rhs_norm : 0.0;
  sol.discrepancy_sq = residual_norm_sq(impl_->a, sol.f_lambda, impl_->g);
  sol.j_value = impl_->j.evaluate(sol.f_lambda);
  sol.optimality_residual = optimality_residual(sol.f_lambda, lambda);
  if (!(sol.optimality_residual <= optimality_bound(lambda))) {
    throw ConvergenceFailure("solve_lagrange: optimality residual " +
                                 std::to_string(sol.optimality_residual) +
                                 " exceeds the acceptance bound at lambda " +
                                 std::to_string(lambda),
                             sol.optimality_residual);
  }
  return sol;
}

double lagrangian_value(const Lagrangian& lag, const Vector& f, double lambda) {
  return lag.value(f, lambda);
}

LagrangeSolution solve_lagrange(const Lagrangian& lag, double lambda, const SolveOptions& options) {
  return lag.solve(lambda, options);
}

ToleranceSetup validate_tolerance_setup(const Lagrangian& lag, const Vector& g) {
  return g.squaredNorm() >= lag.epsilon() ? ToleranceSetup::ok : ToleranceSetup::degenerate;
}

}  // namespace morozov
