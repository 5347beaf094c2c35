#include "conflab/scaled_product.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "conflab/errors.hpp"

namespace conflab {

namespace {

constexpr int kMaxSweeps = 60;
constexpr double kOrthoTol = 1e-15;
constexpr int kReorthEvery = 20;

void reorthonormalize(Matrix& v) {
  Eigen::HouseholderQR<Matrix> qr(v);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (int j = 0; j < v.cols(); ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  v = q;
}

// this <- b·(u diag(e^l) vᵀ), written into (u, l, v).
void left_update(const Matrix& b, Matrix& u, Vector& l, Matrix& v) {
  Matrix c = b * u;
  scaled_jacobi(c, l, v);
  u = c;
}

}  // namespace

void scaled_jacobi(Matrix& c, Vector& s, Matrix& v) {
  const int d = static_cast<int>(c.cols());
  for (int j = 0; j < d; ++j) {
    const double nrm = c.col(j).norm();
    require(nrm > 0.0 && std::isfinite(nrm), Reason::invalid_matrix,
            "scaled product: factor annihilated a column (singular map)");
    c.col(j) /= nrm;
    s(j) += std::log(nrm);
  }
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (int a = 0; a < d - 1; ++a) {
      for (int b = a + 1; b < d; ++b) {
        const int p = s(a) >= s(b) ? a : b;  // larger scale
        const int q = p == a ? b : a;
        const double cosang = c.col(p).dot(c.col(q));
        if (std::abs(cosang) <= kOrthoTol) continue;
        rotated = true;
        const double r = std::exp(s(q) - s(p));  // in (0, 1]
        // Classic Jacobi angle with z = ζ·r and τ = t/r, both bounded.
        const double z = -(1.0 - r * r) / (2.0 * cosang);
        const double sgn = z >= 0.0 ? 1.0 : -1.0;
        const double tau = sgn / (std::abs(z) + std::sqrt(r * r + z * z));
        const double t = tau * r;
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        Vector cp = cs * c.col(p) - (cs * tau * r * r) * c.col(q);
        Vector cq = (cs * tau) * c.col(p) + cs * c.col(q);
        const double np = cp.norm(), nq = cq.norm();
        c.col(p) = cp / np;
        c.col(q) = cq / nq;
        s(p) += std::log(np);
        s(q) += std::log(nq);
        Vector vp = cs * v.col(p) - sn * v.col(q);
        Vector vq = sn * v.col(p) + cs * v.col(q);
        v.col(p) = vp;
        v.col(q) = vq;
      }
    }
    if (!rotated) break;
  }
  // Sort descending by scale.
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return s(x) > s(y); });
  Matrix c2(c.rows(), d), v2(v.rows(), d);
  Vector s2(d);
  for (int j = 0; j < d; ++j) {
    c2.col(j) = c.col(order[j]);
    v2.col(j) = v.col(order[j]);
    s2(j) = s(order[j]);
  }
  c = c2;
  v = v2;
  s = s2;
}

ScaledProduct::ScaledProduct(int dim) : dim_(dim) {
  require(dim >= 1 && dim <= kMaxDim, Reason::argument, "scaled product: dimension out of range");
  u_ = Matrix::Identity(dim, dim);
  v_ = Matrix::Identity(dim, dim);
  l_ = Vector::Zero(dim);
}

ScaledProduct ScaledProduct::from_matrix(const Matrix& m) {
  check_matrix(m, "scaled product");
  ScaledProduct p(static_cast<int>(m.rows()));
  p.left_multiply(m);
  return p;
}

void ScaledProduct::left_multiply(const Matrix& b) {
  left_update(b, u_, l_, v_);
  if (++updates_ % kReorthEvery == 0) reorthonormalize(v_);
}

void ScaledProduct::right_multiply(const Matrix& b) {
  // (P·B)ᵀ = Bᵀ·V·D·Uᵀ, so the roles of U and V swap.
  left_update(b.transpose(), v_, l_, u_);
  if (++updates_ % kReorthEvery == 0) reorthonormalize(u_);
}

SingularData ScaledProduct::singular_data() const {
  std::vector<double> logs(l_.data(), l_.data() + dim_);
  return singular_data_from_logs(logs);
}

Matrix ScaledProduct::dense(double log_shift) const {
  Vector e(dim_);
  for (int j = 0; j < dim_; ++j) e(j) = std::exp(l_(j) - log_shift);
  return u_ * e.asDiagonal() * v_.transpose();
}

double ScaledProduct::apply_log(const Vector& x, Vector* direction) const {
  // Image = U·diag(e^l)·(Vᵀx); scale by the largest contributing exponent.
  Vector y = v_.transpose() * x;
  double top = -INFINITY;
  for (int j = 0; j < dim_; ++j)
    if (y(j) != 0.0) top = std::max(top, l_(j));
  require(std::isfinite(top), Reason::argument, "scaled product: zero vector");
  for (int j = 0; j < dim_; ++j) y(j) *= std::exp(l_(j) - top);
  Vector img = u_ * y;
  const double nrm = img.norm();
  if (direction) *direction = img / nrm;
  return top + std::log(nrm);
}

}  // namespace conflab
