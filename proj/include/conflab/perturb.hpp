#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conflab/analysis.hpp"
#include "conflab/cocycle.hpp"

namespace conflab {

// ---- vector chains -------------------------------------------------------

// u_0 = v, u_k = L_{k-1}···L_0 w, angle(u_{j+1}, L_j u_j) < alpha.
std::vector<Vector> chain_vectors(std::span<const Matrix> maps, const Vector& v, const Vector& w, double alpha);

// Log of ‖Φw‖/‖w‖ − log ‖Φv‖/‖v‖ for Φ the product of maps.
double chain_log_ratio(std::span<const Matrix> maps, const Vector& v, const Vector& w);

// Angle budget for a perturbation of size epsilon of maps bounded by c.
double angle_budget(double epsilon, double c);

// Smallest chain length for which the construction passes the stress cases.
int chain_length(double c, double alpha);

// ---- windows -------------------------------------------------------------

struct Window {
  int index = 0;  // gap index i
  int m = 0;
  int k = 0;
  double alpha = 0.0;
  double c = 1.0;  // per-step distortion bound used in the threshold
  double log_threshold = 0.0;      // log of C^{2k}(1/2)^{m/k-1}
  std::vector<int> members;        // grid indices in W(m)
  int grid_size = 0;
};

double window_log_threshold(double c, int k, int m);

// Default scan ceiling for the window length.
inline constexpr int kDefaultWindowMax = 1000;

Window find_window(const Cocycle& a, int i, double epsilon, int m_max = kDefaultWindowMax,
                   int grid_size = kDefaultGrid);

// log(s_{i+1}/s_i) of A^m(x).
double window_log_ratio(const Cocycle& a, const Point& x, int i, int m);

// ---- merging subspaces ---------------------------------------------------

struct MergeResult {
  std::vector<Matrix> maps;  // L_0 .. L_{m-1}
  int ell = -1;              // sub-window start, −1 when nothing was changed
  double corner = 0.0;       // witness that the product sends part of E into F
  double max_deviation = 0.0;
};

MergeResult merge_subspaces(const Cocycle& a, const Point& x, const Window& w, const Matrix& e, const Matrix& f,
                            double epsilon);

// Splice witness: forward image of E under maps[0..split) against the backward
// image of F under maps[split..m).
double splice_corner(std::span<const Matrix> maps, int split, const Matrix& e, const Matrix& f);

// ---- drop estimate -------------------------------------------------------

struct BvFrames {
  Matrix e;
  Matrix f;
  bool degenerate = false;
};

BvFrames bv_subspaces(const ScaledProduct& p, const ScaledProduct& q, int i);
BvFrames bv_subspaces(const Matrix& p, const Matrix& q, int i);

double exterior_corner(const Matrix& r, int i, const Matrix& e, const Matrix& f);

struct BvCheck {
  double lhs;
  double rhs;
  bool holds;
};
BvCheck bv_bound_check(const Matrix& p, const Matrix& r, const Matrix& q, int i);

// ---- segment perturbation ------------------------------------------------

struct PerturbationPlan {
  Point anchor;
  int n = 0;
  int k = 0;
  int m0 = 0;
  int i0 = 0;
  double epsilon = 0.0;
  std::vector<Matrix> maps;
  double zeta_before = 0.0;  // (1/n)ζ
  double zeta_after = 0.0;
  double z_estimate = 0.0;
  double target = 0.0;  // a_d·Z_est + ε
  double corner = 0.0;
  double delta = 0.0;   // |Δ_k| at the chosen balance point
  std::string certificate;  // early_exit | window_member | postcondition
  double max_deviation = 0.0;

  bool early_exit() const { return certificate == "early_exit"; }
};

struct PerturbOptions {
  int grid_size = kDefaultGrid;
  int window_max = kDefaultWindowMax;
  double delta_fraction = 1.0 / 20.0;  // δ = ε·delta_fraction
  int fallback_attempts = 64;
};

// Holds the per-cocycle preparation (windows, chain length, ζ-control) so many
// anchors can share it.
class SegmentPerturber {
 public:
  SegmentPerturber(const Cocycle& a, double epsilon, PerturbOptions opts = {});

  const Cocycle& cocycle() const { return a_; }
  double epsilon() const { return epsilon_; }
  const std::vector<Window>& windows() const { return windows_; }
  const DimensionConstants& constants() const { return consts_; }

  double z_estimate(int n) const;
  // Smallest j with grid max ζ(A^j)/j below Z_est(n) + δ.
  int zeta_control(int n) const;
  // First time the anchor-independent window set is hit from anywhere on the grid.
  int hitting_time() const;
  int min_length(int n) const;

  PerturbationPlan plan(const Point& x, int n) const;

 private:
  struct Horizon {
    double z_est;
    int m_control;
  };
  const Horizon& horizon(int n) const;

  Cocycle a_;
  double epsilon_;
  PerturbOptions opts_;
  DimensionConstants consts_;
  std::vector<Window> windows_;
  mutable std::map<int, Horizon> horizons_;
};

PerturbationPlan perturb_segment(const Cocycle& a, const Point& x, int n, double epsilon, PerturbOptions opts = {});

// Recomputes (1/n)ζ of the stored maps.
double plan_zeta_rate(const std::vector<Matrix>& maps);
// max_j ‖maps[j] − A(T^j x)‖.
double plan_deviation(const Cocycle& a, const Point& x, const std::vector<Matrix>& maps);

}  // namespace conflab
