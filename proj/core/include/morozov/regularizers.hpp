#pragma once

#include <string_view>

#include "morozov/linops.hpp"

namespace morozov {

/// Outcome of checking a regularizer against a forward operator.
struct AssumptionReport {
  /// True when ker L ∩ ker A = {0} or ker L = {0}; this is the
  /// problem-restricted coercivity that makes every Lagrange problem
  /// well-posed. Coercivity of a seminorm on all of F is not decided.
  bool coercive_on_problem = false;
  bool strictly_convex_along_kernel = false;
  Eigen::Index kernel_intersection_dim = 0;
  /// Always true for quadratic J: the minimum 0 is attained on ker L.
  bool attains_min_on_kernel = true;
};

/// Quadratic regularizer J(f) = ‖L f‖².
class Regularizer {
 public:
  enum class Kind { identity, first_difference, custom };

  Regularizer(LinearOperator seminorm, Kind kind = Kind::custom);

  static Regularizer identity(Eigen::Index n);
  /// L has n−1 rows, (L f)_i = f_{i+1} − f_i. Constants span ker L.
  static Regularizer first_difference(Eigen::Index n);

  const LinearOperator& seminorm_operator() const noexcept { return seminorm_; }
  Kind kind() const noexcept { return kind_; }
  Eigen::Index dim() const noexcept { return seminorm_.cols(); }

  double evaluate(const Vector& f) const;

  /// 2 L^*(L f).
  Vector gradient(const Vector& f) const;

 private:
  LinearOperator seminorm_;
  Kind kind_;
};

std::string_view to_string(Regularizer::Kind kind);
Regularizer::Kind regularizer_kind_from_string(std::string_view name);

/// Dense first-difference matrix of size (n−1) x n.
Matrix first_difference_matrix(Eigen::Index n);

/// Computes dim(ker A ∩ ker L) by restricting L to a numerical basis of
/// ker A (singular values ≤ tol·σ_max treated as zero for both A and the
/// restriction). Throws UnsupportedCheck for matrix-free operators; call
/// densify() first.
AssumptionReport check_assumptions(const Regularizer& j, const LinearOperator& a,
                                   double tol = 1e-10);

}  // namespace morozov
