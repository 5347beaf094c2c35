#include "conflab/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "conflab/errors.hpp"

namespace conflab {

namespace {

json matrix_json(const Matrix& m) {
  json a = json::array();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  return a;
}

}  // namespace

ConstantGenerator::ConstantGenerator(Matrix m) : m_(std::move(m)) {
  check_matrix(m_, "constant generator");
  require(invertible(m_), Reason::invalid_matrix, "constant generator: matrix is singular");
}

json ConstantGenerator::to_json() const { return {{"family", "constant"}, {"matrix", matrix_json(m_)}}; }

RotationScaleGenerator::RotationScaleGenerator(double lambda) : lambda_(lambda) {
  require(std::isfinite(lambda) && lambda > 0.0, Reason::config, "rotation_scale: lambda must be positive");
}

Matrix RotationScaleGenerator::eval(const Point& x) const {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = lambda_;
  d(1, 1) = 1.0 / lambda_;
  return rotation2(2.0 * std::numbers::pi * x.x()) * d;
}

json RotationScaleGenerator::to_json() const { return {{"family", "rotation_scale"}, {"lambda", lambda_}}; }

Matrix SchrodingerGenerator::eval(const Point& x) const {
  Matrix m(2, 2);
  m << energy_ - 2.0 * std::cos(2.0 * std::numbers::pi * x.x()), -1.0, 1.0, 0.0;
  return m;
}

json SchrodingerGenerator::to_json() const { return {{"family", "schrodinger"}, {"energy", energy_}}; }

TableGenerator::TableGenerator(std::vector<Matrix> samples) : samples_(std::move(samples)) {
  require(!samples_.empty(), Reason::config, "table generator: no samples");
  for (const auto& m : samples_) {
    check_matrix(m, "table generator");
    require(m.rows() == samples_.front().rows(), Reason::config, "table generator: mixed dimensions");
  }
}

int TableGenerator::index(double x) const {
  const int n = static_cast<int>(samples_.size());
  int s = static_cast<int>(std::lround(x * n));
  return s >= n ? s - n : s;
}

json TableGenerator::to_json() const {
  json s = json::array();
  for (const auto& m : samples_) s.push_back(matrix_json(m));
  return {{"family", "table"}, {"samples", s}};
}

Cocycle::Cocycle(BaseSystem base, GeneratorPtr gen, int bound_grid) : base_(std::move(base)), gen_(std::move(gen)) {
  require(gen_ != nullptr, Reason::config, "cocycle: missing generator");
  require(bound_grid >= 1, Reason::argument, "cocycle: bound grid must be positive");
  double top = 0.0, bottom = INFINITY, norm = 0.0, distortion = 1.0;
  for (const auto& x : sample_grid(base_, bound_grid)) {
    const Matrix m = gen_->eval(x);
    check_matrix(m, "cocycle generator");
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    require(sv(sv.size() - 1) > 0.0, Reason::invalid_matrix, "cocycle: generator is singular at a grid point");
    top = std::max({top, sv(0), 1.0 / sv(sv.size() - 1)});
    bottom = std::min(bottom, sv(sv.size() - 1));
    norm = std::max(norm, sv(0));
    distortion = std::max(distortion, std::sqrt(sv(0) / sv(sv.size() - 1)));
  }
  bound_ = std::max(top, 1.0);
  min_mininorm_ = bottom;
  norm_bound_ = norm;
  distortion_bound_ = distortion;
}

ScaledProduct Cocycle::product(const Point& x, int n) const {
  require(n >= 0, Reason::argument, "product: negative length");
  ScaledProduct p(dim());
  for (int j = 0; j < n; ++j) p.left_multiply(gen_->eval(base_.step(x, j)));
  return p;
}

json base_to_json(const BaseSystem& base) {
  if (base.kind() == BaseSystem::Kind::circle_rotation) return {{"type", "rotation"}, {"alpha", base.alpha()[0]}};
  return {{"type", "torus"}, {"alpha", base.alpha()}};
}

json Cocycle::to_json() const {
  return {{"dimension", dim()}, {"base", base_to_json(base_)}, {"generator", gen_->to_json()}};
}

Matrix block_diag(const std::vector<Matrix>& blocks) {
  int d = 0;
  for (const auto& b : blocks) d += static_cast<int>(b.rows());
  Matrix m = Matrix::Zero(d, d);
  int o = 0;
  for (const auto& b : blocks) {
    m.block(o, o, b.rows(), b.cols()) = b;
    o += static_cast<int>(b.rows());
  }
  return m;
}

}  // namespace conflab
