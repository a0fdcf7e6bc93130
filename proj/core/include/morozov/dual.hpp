#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "morozov/errors.hpp"
#include "morozov/lagrange.hpp"

namespace morozov {

/// D(λ) = min_f L(f, λ) and its derivative D'(λ) = ‖A f_λ − g‖² − ε.
struct DualEvaluation {
  double lambda = 0.0;
  double d_value = 0.0;
  double d_prime = 0.0;
  /// Absent at λ = 0, where no inner solve is performed.
  std::optional<LagrangeSolution> solution;
};

/// At λ = 0 returns D = 0 and the right derivative ‖g‖² − ε. For λ > 0
/// solves the Lagrange problem; solver errors propagate.
DualEvaluation eval_dual(const Lagrangian& lag, double lambda, const SolveOptions& options = {});

/// Shape of the dual function.
///   interior         dist(g, range A) < τ < ‖g‖: D attains its maximum at λ̄ > 0
///   noise_dominates  τ ≥ ‖g‖: D' < 0 everywhere, the supremum sits at λ = 0
///   too_optimistic   τ ≤ dist(g, range A): D' > 0 everywhere, no maximum
enum class Regime { interior, noise_dominates, too_optimistic };

std::string_view to_string(Regime regime);
Regime regime_from_string(std::string_view name);

struct RegimeDiagnosis {
  double dist_to_range = 0.0;
  double data_norm = 0.0;
  double tau = 0.0;
  Regime regime = Regime::interior;
};

/// Equalities fall into the failing regimes. When both τ ≥ ‖g‖ and
/// τ ≤ dist hold (g orthogonal to range A, τ = ‖g‖) the result is
/// noise_dominates.
Regime classify_regime(double dist_to_range, double data_norm, double tau);

RegimeDiagnosis diagnose_regime(const LinearOperator& a, const Vector& g, double tau,
                                double tol = 1e-12);

/// Human-readable statement of the violated inequality, e.g.
/// "tau >= ||g|| (tau = 2, ||g|| = 1)". Empty for the interior regime.
std::string describe_regime_failure(const RegimeDiagnosis& diagnosis);

enum class Method { bisection, secant, gradient_ascent };

std::string_view to_string(Method method);
Method method_from_string(std::string_view name);

/// Step size ρ_n for dual gradient ascent: constant c or c/n.
struct StepRule {
  enum class Kind { constant, harmonic };
  Kind kind = Kind::harmonic;
  double c = 2.0;

  double step(std::int64_t n) const {
    return kind == Kind::constant ? c : c / static_cast<double>(n);
  }
};

struct MaximizeOptions {
  /// Convergence when |D'(λ)| ≤ rtol·ε.
  double rtol = 1e-8;
  int max_iter = 500;
  double lambda_init = 1.0;
  double lambda_max = kLambdaMax;
  StepRule step_rule;
  /// Run even when the regime check fails.
  bool override_regime = false;
  SolveOptions solve;
};

struct DualTracePoint {
  double lambda = 0.0;
  double d_value = 0.0;
  double d_prime = 0.0;
};

struct SelectionResult {
  double lambda_star = 0.0;
  double alpha = 0.0;  ///< 1 / lambda_star
  Vector f_star;
  double discrepancy = 0.0;  ///< ‖A f_star − g‖
  double tau = 0.0;          ///< sqrt(ε) the solve targeted
  Regime regime = Regime::interior;
  Method method = Method::bisection;
  std::vector<DualTracePoint> iterations;
  bool converged = false;
};

/// maximize_dual refused to run because the regime is not interior.
class RegimeError : public Error {
 public:
  explicit RegimeError(RegimeDiagnosis diagnosis);
  const RegimeDiagnosis& diagnosis() const noexcept { return diagnosis_; }

 private:
  RegimeDiagnosis diagnosis_;
};

/// No sign change of D' below lambda_max (the numerical signature of the
/// too_optimistic regime), or D'(0) ≤ 0.
class BracketFailure : public Error {
 public:
  BracketFailure(const std::string& what, std::vector<DualTracePoint> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<DualTracePoint>& trace() const noexcept { return trace_; }

 private:
  std::vector<DualTracePoint> trace_;
};

/// max_iter exhausted. The partial result holds the last iterate and the
/// full trace, with converged = false.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, SelectionResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const SelectionResult& partial() const noexcept { return partial_; }

 private:
  SelectionResult partial_;
};

/// Finds λ̄ > 0 with D'(λ̄) ≈ 0 so that ‖A f_λ̄ − g‖² = ε to relative
/// tolerance rtol.
///
/// bisection       doubles (or halves) from lambda_init until D' changes
///                 sign, then bisects; geometric midpoints once the lower
///                 end is positive.
/// secant          same bracket, secant steps on D' with a bisection
///                 fallback whenever an iterate leaves the bracket.
/// gradient_ascent λ_0 = 0, λ_n = max(0, λ_{n−1} + ρ_n D'(λ_{n−1})).
SelectionResult maximize_dual(const Lagrangian& lag, Method method,
                              const MaximizeOptions& options = {});

struct SweepPoint {
  double lambda = 0.0;
  std::optional<DualEvaluation> evaluation;
  std::string error;  ///< set when the inner solve failed
};

/// Evaluates the dual on a strictly ascending positive grid using up to
/// `threads` workers (0 picks the hardware concurrency). Per-point failures
/// are recorded and the sweep continues.
std::vector<SweepPoint> sweep_dual(const Lagrangian& lag, const std::vector<double>& lambdas,
                                   const SolveOptions& options = {}, unsigned threads = 0);

/// n points spaced evenly in log10 between lo and hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// For consecutive successful sweep points, chord(λ_i) − D(λ_i) where the
/// chord joins the two neighbours. Nonpositive for a concave D; reduces to
/// half the usual second difference on a uniform grid.
std::vector<double> second_differences(const std::vector<SweepPoint>& sweep);

struct VerifyOptions {
  double rtol = 1e-8;
  int probes = 100;
  std::uint64_t seed = 7;
};

struct VerificationReport {
  bool discrepancy_ok = false;
  bool optimality_ok = false;
  bool minimality_ok = false;
  double discrepancy_gap = 0.0;  ///< |‖A f − g‖² − ε|
  double optimality_residual = 0.0;
  double optimality_bound = 0.0;
  std::vector<std::string> violations;

  bool passed() const noexcept { return violations.empty(); }
};

/// Re-checks a converged selection: the active discrepancy, stationarity of
/// L(·, λ̄) at f_star, and L(f_star, λ̄) ≤ L(f_star + δ, λ̄) for random δ.
VerificationReport verify_morozov_solution(const SelectionResult& result, const Lagrangian& lag,
                                           const VerifyOptions& options = {});

}  // namespace morozov
