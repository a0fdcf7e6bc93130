#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Dense>

namespace morozov {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dimensions of the discretized spaces F (input) and G (output).
struct VectorSpaceDims {
  Eigen::Index dim_f = 0;
  Eigen::Index dim_g = 0;

  friend bool operator==(const VectorSpaceDims&, const VectorSpaceDims&) = default;
};

/// A linear map F -> G between real Euclidean spaces together with its
/// adjoint G -> F.
///
/// Two representations are supported: a dense matrix, and a matrix-free
/// pair of callbacks. Operators are immutable once built and share their
/// state, so copies are cheap and concurrent calls to apply() and
/// apply_adjoint() are safe as long as the callbacks themselves are
/// reentrant.
class LinearOperator {
 public:
  using Map = std::function<Vector(const Vector&)>;

  enum class Representation { dense, matrix_free };

  /// Wraps a dense matrix. Rows are dim_g, columns dim_f.
  explicit LinearOperator(Matrix matrix, std::string name = "dense");

  /// Builds a matrix-free operator from forward and adjoint callbacks.
  LinearOperator(VectorSpaceDims dims, Map forward, Map adjoint,
                 std::string name = "matrix_free");

  static LinearOperator identity(Eigen::Index n);

  const VectorSpaceDims& dims() const noexcept;
  Eigen::Index rows() const noexcept { return dims().dim_g; }
  Eigen::Index cols() const noexcept { return dims().dim_f; }
  Representation representation() const noexcept;
  bool is_dense() const noexcept { return representation() == Representation::dense; }
  const std::string& name() const noexcept;

  /// The dense matrix, if this operator was built from one.
  const Matrix* matrix() const noexcept;

  Vector apply(const Vector& f) const;
  Vector apply_adjoint(const Vector& y) const;

  /// A^*(A f), fused for the dense case.
  Vector gram_apply(const Vector& f) const;

  /// Explicit matrix. For matrix-free operators this applies the operator
  /// to every basis vector of F.
  Matrix to_dense() const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// Dense copy of `op` (no-op for dense operators).
LinearOperator densify(const LinearOperator& op);

/// The composition outer ∘ inner, applied right to left.
LinearOperator compose(const LinearOperator& outer, const LinearOperator& inner);

/// Matrix-free discrete convolution on n samples with a centered odd-length
/// kernel and zero boundary conditions.
LinearOperator convolution(const Vector& kernel, Eigen::Index n);

/// ‖A f − g‖², the squared Euclidean norm of the residual.
double residual_norm_sq(const LinearOperator& op, const Vector& f, const Vector& g);

/// dist(g, range A) = min_f ‖A f − g‖.
///
/// Dense operators project g onto the numerical range spanned by the left
/// singular vectors whose singular values exceed max(m, n)·eps·σ_max. The
/// `tol` argument is then only validated. Matrix-free operators run CGLS on
/// the normal equations until ‖A^*r‖ ≤ tol·‖A^*g‖, capped at 10·dim_f
/// iterations; exceeding the cap throws ConvergenceFailure carrying the
/// best residual norm seen.
double distance_to_range(const LinearOperator& op, const Vector& g, double tol = 1e-12);

/// Throws InvalidInput unless `size == expected`.
void require_size(Eigen::Index size, Eigen::Index expected, const char* what);

}  // namespace morozov
