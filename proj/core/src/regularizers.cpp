#include "morozov/regularizers.hpp"

#include <string>
#include <utility>

#include "morozov/errors.hpp"

namespace morozov {

Regularizer::Regularizer(LinearOperator seminorm, Kind kind)
    : seminorm_(std::move(seminorm)), kind_(kind) {}

Regularizer Regularizer::identity(Eigen::Index n) {
  return Regularizer(LinearOperator::identity(n), Kind::identity);
}

Matrix first_difference_matrix(Eigen::Index n) {
  if (n < 2) throw InvalidInput("first_difference: n must be at least 2");
  Matrix d = Matrix::Zero(n - 1, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    d(i, i) = -1.0;
    d(i, i + 1) = 1.0;
  }
  return d;
}

Regularizer Regularizer::first_difference(Eigen::Index n) {
  return Regularizer(LinearOperator(first_difference_matrix(n), "first_difference"),
                     Kind::first_difference);
}

double Regularizer::evaluate(const Vector& f) const {
  require_size(f.size(), dim(), "Regularizer::evaluate");
  return seminorm_.apply(f).squaredNorm();
}

Vector Regularizer::gradient(const Vector& f) const {
  require_size(f.size(), dim(), "Regularizer::gradient");
  return 2.0 * seminorm_.gram_apply(f);
}

std::string_view to_string(Regularizer::Kind kind) {
  switch (kind) {
    case Regularizer::Kind::identity:
      return "identity";
    case Regularizer::Kind::first_difference:
      return "first_difference";
    case Regularizer::Kind::custom:
      return "custom";
  }
  return "custom";
}

Regularizer::Kind regularizer_kind_from_string(std::string_view name) {
  if (name == "identity") return Regularizer::Kind::identity;
  if (name == "first_difference" || name == "first-difference") {
    return Regularizer::Kind::first_difference;
  }
  if (name == "custom") return Regularizer::Kind::custom;
  throw InvalidInput("unknown regularizer kind '" + std::string(name) + "'");
}

namespace {

Eigen::Index numerical_rank(const Vector& sigma, double tol) {
  if (sigma.size() == 0 || sigma[0] == 0.0) return 0;
  const double threshold = tol * sigma[0];
  Eigen::Index rank = 0;
  while (rank < sigma.size() && sigma[rank] > threshold) ++rank;
  return rank;
}

}  // namespace

AssumptionReport check_assumptions(const Regularizer& j, const LinearOperator& a, double tol) {
  if (!(tol > 0.0)) throw InvalidInput("check_assumptions: tol must be positive");
  require_size(j.dim(), a.cols(), "check_assumptions");
  const LinearOperator& l = j.seminorm_operator();
  if (!a.is_dense() || !l.is_dense()) {
    throw UnsupportedCheck(
        "check_assumptions needs dense operators; materialize them with densify() first");
  }
  const Matrix& am = *a.matrix();
  const Matrix& lm = *l.matrix();
  const Eigen::Index n = am.cols();

  // Full V is needed for the kernel basis; JacobiSVD handles wide matrices.
  Eigen::JacobiSVD<Matrix> svd_a(am, Eigen::ComputeFullV);
  const Eigen::Index rank_a = numerical_rank(svd_a.singularValues(), tol);
  const Eigen::Index kernel_dim = n - rank_a;

  Eigen::JacobiSVD<Matrix> svd_l(lm);
  const Eigen::Index rank_l = numerical_rank(svd_l.singularValues(), tol);

  AssumptionReport report;
  if (kernel_dim == 0) {
    report.kernel_intersection_dim = 0;
  } else {
    const Matrix kernel_basis = svd_a.matrixV().rightCols(kernel_dim);
    const Matrix restricted = lm * kernel_basis;
    Eigen::JacobiSVD<Matrix> svd_r(restricted);
    // Relative to ‖L‖ so that a restriction that is numerically zero is
    // not rescaled into full rank.
    const Vector& sr = svd_r.singularValues();
    const double scale = svd_l.singularValues().size() > 0 ? svd_l.singularValues()[0] : 0.0;
    Eigen::Index rank_r = 0;
    while (rank_r < sr.size() && sr[rank_r] > tol * scale) ++rank_r;
    report.kernel_intersection_dim = kernel_dim - rank_r;
  }
  report.strictly_convex_along_kernel = report.kernel_intersection_dim == 0;
  report.coercive_on_problem = report.strictly_convex_along_kernel || rank_l == n;
  report.attains_min_on_kernel = true;
  return report;
}

}  // namespace morozov
