#include "conflab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "conflab/errors.hpp"

namespace conflab {

std::string_view reason_code(Reason r) {
  switch (r) {
    case Reason::invalid_matrix: return "invalid_matrix";
    case Reason::argument: return "argument";
    case Reason::unsupported: return "unsupported";
    case Reason::hypothesis_violation: return "hypothesis_violation";
    case Reason::internal_contradiction: return "internal_contradiction";
    case Reason::domination_detected: return "domination_detected";
    case Reason::drop_failure: return "drop_failure";
    case Reason::continuation_failure: return "continuation_failure";
    case Reason::non_convergence: return "non_convergence";
    case Reason::invalid_frame: return "invalid_frame";
    case Reason::budget: return "budget";
    case Reason::config: return "config";
    case Reason::internal: return "internal";
  }
  return "internal";
}

int exit_code(Reason r) { return 10 + static_cast<int>(r); }

SingularData singular_data_from_logs(std::span<const double> lambdas) {
  SingularData s;
  const int d = static_cast<int>(lambdas.size());
  s.dim = d;
  s.lambdas.assign(lambdas.begin(), lambdas.end());
  std::sort(s.lambdas.begin(), s.lambdas.end(), std::greater<>());
  s.sigmas.assign(d + 1, 0.0);
  for (int i = 1; i <= d; ++i) s.sigmas[i] = s.sigmas[i - 1] + s.lambdas[i - 1];
  s.gammas.resize(d > 1 ? d - 1 : 0);
  for (int i = 1; i < d; ++i) s.gammas[i - 1] = 0.5 * (s.lambdas[i - 1] - s.lambdas[i]);
  if (d >= 2) {
    double z = 0.0;
    for (int i = 1; i < d; ++i) z += s.sigmas[i];
    z -= 0.5 * double(d - 1) * s.sigmas[d];
    // Rounding can leave a conformal map a hair below zero.
    s.zeta = std::max(z, 0.0);
    s.kappa = s.lambdas.front() - s.lambdas.back();
  }
  s.mininorm_log = d > 0 ? s.lambdas.back() : 0.0;
  return s;
}

void check_matrix(const Matrix& m, const char* what) {
  require(m.rows() == m.cols() && m.rows() >= 1 && m.rows() <= kMaxDim, Reason::invalid_matrix,
          std::string(what) + ": expected a square matrix of size 1.." + std::to_string(kMaxDim));
  require(m.allFinite(), Reason::invalid_matrix, std::string(what) + ": non-finite entries");
}

SingularData singular_data(const Matrix& m) {
  check_matrix(m, "singular_data");
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  require(sv(sv.size() - 1) > 0.0, Reason::invalid_matrix, "singular_data: matrix is singular");
  std::vector<double> logs(sv.size());
  for (int i = 0; i < sv.size(); ++i) logs[i] = std::log(sv(i));
  return singular_data_from_logs(logs);
}

double zeta_from_logs(std::span<const double> lambdas) {
  const int d = static_cast<int>(lambdas.size());
  double sigma = 0.0, z = 0.0;
  for (int i = 0; i < d; ++i) {
    sigma += lambdas[i];
    if (i < d - 1) z += sigma;
  }
  return std::max(z - 0.5 * double(d - 1) * sigma, 0.0);
}

double operator_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double log_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return std::log(svd.singularValues()(0));
}

bool invertible(const Matrix& m) {
  if (!m.allFinite()) return false;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  return sv(sv.size() - 1) > 1e-300 && sv(sv.size() - 1) > sv(0) * 1e-15;
}

long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

std::vector<std::vector<int>> index_subsets(int d, int i) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(i);
  for (int j = 0; j < i; ++j) cur[j] = j;
  while (true) {
    out.push_back(cur);
    int p = i - 1;
    while (p >= 0 && cur[p] == d - i + p) --p;
    if (p < 0) break;
    ++cur[p];
    for (int j = p + 1; j < i; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

Eigen::MatrixXd exterior_power(const Matrix& m, int i) {
  check_matrix(m, "exterior_power");
  const int d = static_cast<int>(m.rows());
  require(i >= 1 && i <= d, Reason::argument, "exterior_power: index out of range");
  const auto subsets = index_subsets(d, i);
  const int n = static_cast<int>(subsets.size());
  Eigen::MatrixXd out(n, n);
  Matrix minor(i, i);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      for (int a = 0; a < i; ++a)
        for (int b = 0; b < i; ++b) minor(a, b) = m(subsets[r][a], subsets[c][b]);
      out(r, c) = minor.determinant();
    }
  }
  return out;
}

HalfGap max_half_gap(const SingularData& s) {
  require(s.dim >= 2, Reason::argument, "max_half_gap: dimension 1 has no gaps");
  HalfGap best{1, s.gammas[0]};
  for (int i = 2; i < s.dim; ++i)
    if (s.gammas[i - 1] > best.value) best = {i, s.gammas[i - 1]};
  return best;
}

DimensionConstants dimension_constants(int d) {
  require(d >= 2, Reason::argument, "dimension_constants: d must be at least 2");
  const double dd = d;
  const double b = 6.0 / (dd * (dd * dd - 1.0));
  return {d, b, 1.0 / (1.0 + b / 2.0), dd + 2.0 * std::log(double(binomial(d, d / 2)))};
}

std::vector<double> zeta_gap_weights(int d, int i0) {
  require(d >= 2 && i0 >= 1 && i0 < d, Reason::argument, "zeta_gap_weights: index out of range");
  std::vector<double> u(d - 1, 1.0);
  for (int i = 1; i < d; ++i) {
    if (i == i0) u[i - 1] = 2.0;
    else if (std::abs(i - i0) == 1) u[i - 1] = 0.5;
  }
  return u;
}

Matrix rotation2(double theta) {
  Matrix r(2, 2);
  const double c = std::cos(theta), s = std::sin(theta);
  r << c, -s, s, c;
  return r;
}

double vector_angle(const Vector& a, const Vector& b) {
  // Half-angle form stays accurate for nearly parallel vectors.
  const Vector ua = a / a.norm(), ub = b / b.norm();
  return 2.0 * std::atan2((ua - ub).norm(), (ua + ub).norm());
}

Matrix plane_rotation(const Vector& a, const Vector& b) {
  const int d = static_cast<int>(a.size());
  Vector e1 = a.normalized();
  Vector t = b.normalized();
  Vector e2 = t - t.dot(e1) * e1;
  const double s = e2.norm();
  Matrix id = Matrix::Identity(d, d);
  if (s < 1e-300) return id;
  e2 /= s;
  const double c = t.dot(e1);
  // Rotation by θ in span(e1, e2): I + (c-1)(e1e1ᵀ + e2e2ᵀ) + s(e2e1ᵀ - e1e2ᵀ).
  return id + (c - 1.0) * (e1 * e1.transpose() + e2 * e2.transpose()) +
         s * (e2 * e1.transpose() - e1 * e2.transpose());
}

}  // namespace conflab
