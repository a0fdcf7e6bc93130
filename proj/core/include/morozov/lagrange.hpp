#pragma once

#include <memory>
#include <optional>
#include <string_view>

#include "morozov/linops.hpp"
#include "morozov/regularizers.hpp"

namespace morozov {

/// Largest multiplier accepted by the Lagrange solver. The system
/// L^*L + λA^*A loses accuracy as λ grows.
inline constexpr double kLambdaMax = 1e12;

enum class SolverKind { direct, iterative };

std::string_view to_string(SolverKind kind);

struct SolveOptions {
  SolverKind solver = SolverKind::direct;
  /// Relative residual target for conjugate gradients.
  double tol = 1e-10;
  /// Jacobi preconditioning for the iterative path.
  bool jacobi = false;
};

struct SolverStats {
  SolverKind method = SolverKind::direct;
  Eigen::Index iterations = 0;
  bool factorized = false;
  /// ‖M f − b‖ / ‖b‖ for the scaled system M f = b.
  double relative_residual = 0.0;
};

/// The unique minimizer f_λ of L(·, λ) with diagnostics.
struct LagrangeSolution {
  double lambda = 0.0;
  Vector f_lambda;
  double discrepancy_sq = 0.0;  ///< ‖A f_λ − g‖²
  double j_value = 0.0;         ///< J(f_λ)
  double optimality_residual = 0.0;
  SolverStats stats;
};

enum class ToleranceSetup { ok, degenerate };

/// L(f, λ) = J(f) + λ(‖A f − g‖² − ε) for fixed data (A, g, J, ε).
///
/// The object is immutable and cheap to copy. For dense operators the Gram
/// matrices A^*A and L^*L are assembled once at construction and
/// the kernel condition ker L ∩ ker A = {0} is checked; the report is available
/// via assumptions().
class Lagrangian {
 public:
  Lagrangian(LinearOperator a, Vector g, Regularizer j, double epsilon);

  const LinearOperator& forward() const noexcept;
  const Vector& data() const noexcept;
  const Regularizer& regularizer() const noexcept;
  double epsilon() const noexcept;
  double data_norm_sq() const noexcept;

  /// Present only when both operators are dense.
  const std::optional<AssumptionReport>& assumptions() const noexcept;

  double value(const Vector& f, double lambda) const;

  /// Solves (L^*L + λA^*A) f = λA^*g.
  ///
  /// Throws InvalidInput for λ ≤ 0 or λ > kLambdaMax, AssumptionViolation
  /// when ker L ∩ ker A ≠ {0} or the factorization breaks down, and
  /// ConvergenceFailure when CG needs more than 10·dim_f iterations or the
  /// result misses the optimality tolerance.
  LagrangeSolution solve(double lambda, const SolveOptions& options = {}) const;

  /// ‖∇J(f) + 2λ(A^*A f − A^*g)‖.
  double optimality_residual(const Vector& f, double lambda) const;

  /// 1e−8·(1 + ‖2λA^*g‖), the acceptance bound on optimality_residual.
  double optimality_bound(double lambda) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

double lagrangian_value(const Lagrangian& lag, const Vector& f, double lambda);

LagrangeSolution solve_lagrange(const Lagrangian& lag, double lambda,
                                const SolveOptions& options = {});

/// ok iff ‖g‖² ≥ ε, when the equality- and inequality-constrained problems
/// coincide.
ToleranceSetup validate_tolerance_setup(const Lagrangian& lag, const Vector& g);

}  // namespace morozov
