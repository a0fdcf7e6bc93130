#include "morozov/linops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "morozov/errors.hpp"

namespace morozov {

struct LinearOperator::Impl {
  VectorSpaceDims dims;
  Representation representation;
  std::string name;
  Matrix matrix;  // empty unless dense
  Map forward;
  Map adjoint;
};

void require_size(Eigen::Index size, Eigen::Index expected, const char* what) {
  if (size != expected) {
    throw InvalidInput(std::string(what) + ": dimension mismatch (got " + std::to_string(size) +
                       ", expected " + std::to_string(expected) + ")");
  }
}

LinearOperator::LinearOperator(Matrix matrix, std::string name) {
  if (matrix.rows() < 1 || matrix.cols() < 1) {
    throw InvalidInput("LinearOperator: matrix must be at least 1x1");
  }
  auto impl = std::make_shared<Impl>();
  impl->dims = {matrix.cols(), matrix.rows()};
  impl->representation = Representation::dense;
  impl->name = std::move(name);
  impl->matrix = std::move(matrix);
  impl_ = std::move(impl);
}

LinearOperator::LinearOperator(VectorSpaceDims dims, Map forward, Map adjoint, std::string name) {
  if (dims.dim_f < 1 || dims.dim_g < 1) {
    throw InvalidInput("LinearOperator: dimensions must be positive");
  }
  if (!forward || !adjoint) {
    throw InvalidInput("LinearOperator: forward and adjoint callbacks are required");
  }
  auto impl = std::make_shared<Impl>();
  impl->dims = dims;
  impl->representation = Representation::matrix_free;
  impl->name = std::move(name);
  impl->forward = std::move(forward);
  impl->adjoint = std::move(adjoint);
  impl_ = std::move(impl);
}

LinearOperator LinearOperator::identity(Eigen::Index n) {
  if (n < 1) throw InvalidInput("identity: n must be positive");
  return LinearOperator(Matrix::Identity(n, n), "identity");
}

const VectorSpaceDims& LinearOperator::dims() const noexcept { return impl_->dims; }

LinearOperator::Representation LinearOperator::representation() const noexcept {
  return impl_->representation;
}

const std::string& LinearOperator::name() const noexcept { return impl_->name; }

const Matrix* LinearOperator::matrix() const noexcept {
  return is_dense() ? &impl_->matrix : nullptr;
}

Vector LinearOperator::apply(const Vector& f) const {
  require_size(f.size(), cols(), "apply");
  if (is_dense()) return impl_->matrix * f;
  Vector out = impl_->forward(f);
  require_size(out.size(), rows(), "apply (callback result)");
  return out;
}

Vector LinearOperator::apply_adjoint(const Vector& y) const {
  require_size(y.size(), rows(), "apply_adjoint");
  if (is_dense()) return impl_->matrix.transpose() * y;
  Vector out = impl_->adjoint(y);
  require_size(out.size(), cols(), "apply_adjoint (callback result)");
  return out;
}

Vector LinearOperator::gram_apply(const Vector& f) const {
  require_size(f.size(), cols(), "gram_apply");
  if (is_dense()) {
    const Vector af = impl_->matrix * f;
    return impl_->matrix.transpose() * af;
  }
  return apply_adjoint(apply(f));
}

Matrix LinearOperator::to_dense() const {
  if (is_dense()) return impl_->matrix;
  Matrix out(rows(), cols());
  Vector e = Vector::Zero(cols());
  for (Eigen::Index j = 0; j < cols(); ++j) {
    e[j] = 1.0;
    out.col(j) = apply(e);
    e[j] = 0.0;
  }
  return out;
}

LinearOperator densify(const LinearOperator& op) {
  if (op.is_dense()) return op;
  return LinearOperator(op.to_dense(), op.name());
}

LinearOperator compose(const LinearOperator& outer, const LinearOperator& inner) {
  require_size(inner.rows(), outer.cols(), "compose");
  const std::string name = outer.name() + "*" + inner.name();
  if (outer.is_dense() && inner.is_dense()) {
    return LinearOperator(Matrix(*outer.matrix() * *inner.matrix()), name);
  }
  return LinearOperator(
      {inner.cols(), outer.rows()},
      [outer, inner](const Vector& f) { return outer.apply(inner.apply(f)); },
      [outer, inner](const Vector& y) { return inner.apply_adjoint(outer.apply_adjoint(y)); },
      name);
}

LinearOperator convolution(const Vector& kernel, Eigen::Index n) {
  if (n < 1) throw InvalidInput("convolution: n must be positive");
  if (kernel.size() < 1 || kernel.size() % 2 == 0) {
    throw InvalidInput("convolution: kernel length must be odd");
  }
  const Eigen::Index half = kernel.size() / 2;
  // (K f)_i = sum_j kernel[j - i + half] f_j over |i - j| <= half.
  auto forward = [kernel, n, half](const Vector& f) {
    Vector out = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
      const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half);
      double acc = 0.0;
      for (Eigen::Index j = lo; j <= hi; ++j) acc += kernel[j - i + half] * f[j];
      out[i] = acc;
    }
    return out;
  };
  auto adjoint = [kernel, n, half](const Vector& y) {
    Vector out = Vector::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, j - half);
      const Eigen::Index hi = std::min<Eigen::Index>(n - 1, j + half);
      double acc = 0.0;
      for (Eigen::Index i = lo; i <= hi; ++i) acc += kernel[j - i + half] * y[i];
      out[j] = acc;
    }
    return out;
  };
  return LinearOperator({n, n}, std::move(forward), std::move(adjoint), "convolution");
}

double residual_norm_sq(const LinearOperator& op, const Vector& f, const Vector& g) {
  require_size(g.size(), op.rows(), "residual_norm_sq");
  return (op.apply(f) - g).squaredNorm();
}

namespace {

double dense_distance(const Matrix& a, const Vector& g) {
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU);
  const Vector& sigma = svd.singularValues();
  const double smax = sigma.size() > 0 ? sigma[0] : 0.0;
  const double threshold = static_cast<double>(std::max(a.rows(), a.cols())) *
                           std::numeric_limits<double>::epsilon() * smax;
  Eigen::Index rank = 0;
  while (rank < sigma.size() && sigma[rank] > threshold) ++rank;
  if (rank == 0) return g.norm();
  const auto u = svd.matrixU().leftCols(rank);
  const Vector projected = u * (u.transpose() * g);
  return (g - projected).norm();
}

// CGLS: conjugate gradients on A^*A f = A^*g without forming A^*A.
double iterative_distance(const LinearOperator& op, const Vector& g, double tol) {
  const Eigen::Index cap = 10 * op.cols();
  Vector f = Vector::Zero(op.cols());
  Vector r = g;
  Vector s = op.apply_adjoint(r);
  const double s0 = s.norm();
  if (s0 == 0.0) return g.norm();
  Vector p = s;
  double gamma = s.squaredNorm();
  double best = r.norm();
  for (Eigen::Index it = 0; it < cap; ++it) {
    const Vector q = op.apply(p);
    const double qq = q.squaredNorm();
    if (qq == 0.0) break;
    const double step = gamma / qq;
    f += step * p;
    r -= step * q;
    best = std::min(best, r.norm());
    s = op.apply_adjoint(r);
    const double gamma_next = s.squaredNorm();
    if (std::sqrt(gamma_next) <= tol * s0) {
      return (op.apply(f) - g).norm();
    }
    p = s + (gamma_next / gamma) * p;
    gamma = gamma_next;
  }
  throw ConvergenceFailure("distance_to_range: CGLS did not converge within " +
                               std::to_string(cap) + " iterations",
                           best);
}

}  // namespace

double distance_to_range(const LinearOperator& op, const Vector& g, double tol) {
  if (!(tol > 0.0)) throw InvalidInput("distance_to_range: tol must be positive");
  require_size(g.size(), op.rows(), "distance_to_range");
  if (op.is_dense()) return dense_distance(*op.matrix(), g);
  return iterative_distance(op, g, tol);
}

}  // namespace morozov
