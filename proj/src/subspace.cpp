#include "conflab/subspace.hpp"

#include <algorithm>
#include <cmath>

#include "conflab/errors.hpp"

namespace conflab {

Matrix orthonormalize(const Matrix& cols) {
  Eigen::HouseholderQR<Matrix> qr(cols);
  Matrix q = qr.householderQ();
  Matrix thin = q.leftCols(cols.cols());
  const Matrix r = qr.matrixQR();
  for (int j = 0; j < cols.cols(); ++j)
    if (r(j, j) < 0) thin.col(j) = -thin.col(j);
  return thin;
}

Matrix complement(const Matrix& basis) {
  const int d = static_cast<int>(basis.rows());
  const int k = static_cast<int>(basis.cols());
  if (k == 0) return Matrix::Identity(d, d);
  Eigen::HouseholderQR<Matrix> qr(basis);
  Matrix q = qr.householderQ();
  return q.rightCols(d - k);
}

bool is_orthonormal(const Matrix& basis, double tol) {
  const int k = static_cast<int>(basis.cols());
  return (basis.transpose() * basis - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() <= tol;
}

double max_principal_angle(const Matrix& a, const Matrix& b) {
  // sin of the largest angle = ‖(I - bbᵀ)a‖.
  const Matrix resid = a - b * (b.transpose() * a);
  Eigen::JacobiSVD<Matrix> svd(resid);
  return std::asin(std::min(1.0, svd.singularValues()(0)));
}

double min_principal_angle(const Matrix& a, const Matrix& b) {
  Eigen::JacobiSVD<Matrix> svd(Matrix(a.transpose() * b));
  return std::acos(std::min(1.0, svd.singularValues()(0)));
}

Matrix intersect(const Matrix& a, const Matrix& b, int dim) {
  Eigen::JacobiSVD<Matrix> svd(Matrix(a.transpose() * b), Eigen::ComputeFullU);
  Matrix v = a * svd.matrixU().leftCols(dim);
  return orthonormalize(v);
}

double subspace_corner(const Matrix& h, const Matrix& g) {
  const Matrix gperp = complement(g);
  require(gperp.cols() == h.cols(), Reason::argument, "subspace_corner: dimensions do not add up");
  return std::abs((gperp.transpose() * orthonormalize(h)).determinant());
}

Matrix canonical_basis(const Matrix& basis, const Matrix& reference) {
  return orthonormalize(Matrix(basis * (basis.transpose() * reference)));
}

}  // namespace conflab
