#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "conflab/dynamics.hpp"
#include "conflab/linalg.hpp"
#include "conflab/scaled_product.hpp"

namespace conflab {

using json = nlohmann::json;

class Generator {
 public:
  virtual ~Generator() = default;
  virtual int dim() const = 0;
  virtual Matrix eval(const Point& x) const = 0;
  virtual json to_json() const = 0;
};

using GeneratorPtr = std::shared_ptr<const Generator>;

class ConstantGenerator : public Generator {
 public:
  explicit ConstantGenerator(Matrix m);
  int dim() const override { return static_cast<int>(m_.rows()); }
  Matrix eval(const Point&) const override { return m_; }
  json to_json() const override;

 private:
  Matrix m_;
};

// R_{2πθ(x)}·diag(λ, 1/λ), θ the first coordinate.
class RotationScaleGenerator : public Generator {
 public:
  explicit RotationScaleGenerator(double lambda);
  int dim() const override { return 2; }
  Matrix eval(const Point& x) const override;
  json to_json() const override;
  double lambda() const { return lambda_; }

 private:
  double lambda_;
};

class SchrodingerGenerator : public Generator {
 public:
  explicit SchrodingerGenerator(double energy) : energy_(energy) {}
  int dim() const override { return 2; }
  Matrix eval(const Point& x) const override;
  json to_json() const override;

 private:
  double energy_;
};

// Samples at t_s = s/size on the circle; evaluation returns the nearest sample.
class TableGenerator : public Generator {
 public:
  explicit TableGenerator(std::vector<Matrix> samples);
  int dim() const override { return static_cast<int>(samples_.front().rows()); }
  Matrix eval(const Point& x) const override { return samples_[index(x.x())]; }
  json to_json() const override;
  int index(double x) const;
  const std::vector<Matrix>& samples() const { return samples_; }

 private:
  std::vector<Matrix> samples_;
};

class Cocycle {
 public:
  static constexpr int kDefaultBoundGrid = 4096;

  Cocycle(BaseSystem base, GeneratorPtr gen, int bound_grid = kDefaultBoundGrid);

  const BaseSystem& base() const { return base_; }
  const GeneratorPtr& generator() const { return gen_; }
  int dim() const { return gen_->dim(); }
  Matrix operator()(const Point& x) const { return gen_->eval(x); }

  // C ≥ max(‖A(x)‖, ‖A(x)⁻¹‖) over the bound grid.
  double bound() const { return bound_; }
  // Smallest singular value of A over the bound grid.
  double min_mininorm() const { return min_mininorm_; }
  // max ‖A(x)‖, which limits how far a rotated copy of A(x) moves.
  double norm_bound() const { return norm_bound_; }
  // max sqrt(‖A(x)‖·‖A(x)⁻¹‖): blind to conformal scale, equals C when det A = ±1.
  double distortion_bound() const { return distortion_bound_; }

  ScaledProduct product(const Point& x, int n) const;
  json to_json() const;

 private:
  BaseSystem base_;
  GeneratorPtr gen_;
  double bound_ = 1.0;
  double min_mininorm_ = 1.0;
  double norm_bound_ = 1.0;
  double distortion_bound_ = 1.0;
};

json base_to_json(const BaseSystem& base);
BaseSystem base_from_json(const json& j);
GeneratorPtr generator_from_json(const json& j, int dim);
Cocycle cocycle_from_json(const json& j);

// Block diagonal constant, convenient in tests and examples.
Matrix block_diag(const std::vector<Matrix>& blocks);

}  // namespace conflab
