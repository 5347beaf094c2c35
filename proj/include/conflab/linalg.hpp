#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace conflab {

inline constexpr int kMaxDim = 8;

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

// Below this ζ a map counts as conformal.
inline constexpr double kConformalTol = 1e-9;

struct SingularData {
  int dim = 0;
  std::vector<double> lambdas;  // log singular values, non-increasing
  std::vector<double> sigmas;   // sigmas[0] = 0, sigmas[i] = λ_1 + ... + λ_i
  std::vector<double> gammas;   // gammas[i-1] = (λ_i - λ_{i+1}) / 2
  double zeta = 0.0;
  double kappa = 0.0;
  double mininorm_log = 0.0;

  double sigma(int i) const { return sigmas[i]; }
  double gamma(int i) const { return gammas[i - 1]; }
  bool conformal() const { return zeta < kConformalTol; }
};

// Builds the full record from log singular values (sorted here).
SingularData singular_data_from_logs(std::span<const double> lambdas);
SingularData singular_data(const Matrix& m);
// ζ straight from descending log singular values, no allocation.
double zeta_from_logs(std::span<const double> lambdas);

double log_norm(const Matrix& m);
double operator_norm(const Matrix& m);
bool invertible(const Matrix& m);
void check_matrix(const Matrix& m, const char* what);

long binomial(int n, int k);

// Lexicographic index subsets of {0..d-1} of size i.
std::vector<std::vector<int>> index_subsets(int d, int i);

// Matrix of i×i minors, rows/cols indexed by index_subsets(d, i).
Eigen::MatrixXd exterior_power(const Matrix& m, int i);

struct HalfGap {
  int index;  // 1-based
  double value;
};
HalfGap max_half_gap(const SingularData& s);

struct DimensionConstants {
  int dim;
  double b;
  double a;
  double c;
};
DimensionConstants dimension_constants(int d);

// Weights u_i with ζ + γ_{i0} = Σ u_i σ_i when σ_d = 0; entry [i-1] is u_i.
std::vector<double> zeta_gap_weights(int d, int i0);

Matrix rotation2(double theta);
// Rotation in the plane of unit vectors a, b taking a to b (identity on the complement).
Matrix plane_rotation(const Vector& a, const Vector& b);
double vector_angle(const Vector& a, const Vector& b);

}  // namespace conflab
