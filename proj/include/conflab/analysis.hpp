#pragma once

#include <string>
#include <vector>

#include "conflab/cocycle.hpp"
#include "conflab/kernels.hpp"

namespace conflab {

inline constexpr int kDefaultGrid = 4096;

enum class Functional { zeta, kappa, sigma };

// (1/n)·max over the grid for each horizon in `horizons`.
struct DistortionSeries {
  std::vector<int> horizons;
  std::vector<double> sup_rate;
  std::vector<double> avg_rate;
  int grid_size = 0;
  double final_rate() const { return sup_rate.back(); }
};

DistortionSeries distortion_series(const Cocycle& a, Functional f, const std::vector<int>& horizons, int grid_size,
                                   int sigma_index = 1);

double estimate_Z(const Cocycle& a, int n, int grid_size = kDefaultGrid);
double estimate_K(const Cocycle& a, int n, int grid_size = kDefaultGrid);

std::vector<double> lyapunov_spectrum(const Cocycle& a, const Point& x, int n);

struct SusaetResult {
  double sup_side;
  double avg_side;
};
SusaetResult susaet_check(const Cocycle& a, Functional f, int n, int grid_size = kDefaultGrid, int sigma_index = 1);

struct IndexFit {
  int index;  // 1-based
  double gap_rate;
  double tau_estimate;
  double c_estimate;
  double r_squared;
  bool dominated;
};

struct DominationReport {
  int dim = 0;
  int horizon = 0;
  int grid_size = 0;
  double threshold = 0.0;
  std::vector<IndexFit> fits;
  std::vector<int> indices;
};

// Slope needed (nats/step) before a gap counts as dominated.
inline constexpr double kDominationThreshold = 0.1;
inline constexpr double kDominationR2 = 0.9;

DominationReport detect_domination(const Cocycle& a, int horizon, int grid_size = kDefaultGrid);

// Orthonormal bases for the bundles at consecutive orbit points x_j = T^j(x_0).
struct SplittingFrame {
  std::vector<Point> points;
  std::vector<int> dims;
  std::vector<std::vector<Matrix>> bases;  // [point][bundle]
  std::vector<int> indices;
  double equivariance_defect = 0.0;
  int worst_point = 0;
  int horizon = 0;

  int bundles() const { return static_cast<int>(dims.size()); }
  bool trivial() const { return dims.size() == 1; }
};

inline constexpr double kEquivarianceTol = 1e-6;

// Frames at the first `count` orbit points of 0.
SplittingFrame finest_splitting(const Cocycle& a, const DominationReport& report, int horizon, int count);
SplittingFrame finest_splitting(const Cocycle& a, const DominationReport& report, int horizon);

// Recomputes the splitting of a_new and orders its bundles to match `old`.
SplittingFrame continuation_match(const SplittingFrame& old, const Cocycle& a_new, int horizon);

// Matrices of A restricted to a bundle: B(x_j) = E(x_{j+1})ᵀ A(x_j) E(x_j).
std::vector<Matrix> restricted_maps(const Cocycle& a, const SplittingFrame& frame, int bundle);

// Needs frame.points.size() > n; max over starts 0..size-n-1.
double estimate_Z_fine(const Cocycle& a, const SplittingFrame& frame, int n);
double estimate_K_fine(const Cocycle& a, const SplittingFrame& frame, int n);

}  // namespace conflab
