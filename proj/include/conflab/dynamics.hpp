#pragma once

#include <array>
#include <vector>

namespace conflab {

inline constexpr int kMaxTorusDim = 4;

struct Point {
  std::array<double, kMaxTorusDim> c{};
  int dim = 1;

  Point() = default;
  explicit Point(double x) : dim(1) { c[0] = x; }
  double operator[](int i) const { return c[i]; }
  double x() const { return c[0]; }
};

double frac(double x);
// Wraparound distance on [0,1).
double circle_distance(double a, double b);

// Half-open arc [a, a + len) on the circle, possibly wrapping through 0.
struct Interval {
  double a = 0.0;
  double len = 0.0;
  double end() const { return a + len; }
  bool contains(double x) const { return frac(x - a) < len; }
  // Position of x measured from a along the arc.
  double offset(double x) const { return frac(x - a); }
  Interval shifted(double t) const { return {frac(a + t), len}; }
};

class BaseSystem {
 public:
  enum class Kind { circle_rotation, torus_translation };

  static BaseSystem rotation(double alpha);
  static BaseSystem torus(const std::vector<double>& alpha);

  Kind kind() const { return kind_; }
  int dim() const { return static_cast<int>(alpha_.size()); }
  const std::vector<double>& alpha() const { return alpha_; }

  Point step(const Point& x, long n) const;
  Point origin() const;
  double distance(const Point& a, const Point& b) const;

 private:
  Kind kind_ = Kind::circle_rotation;
  std::vector<double> alpha_;
};

// True if x is within tol of p/q for some q ≤ max_q.
bool near_rational(double x, long max_q = 10000, double tol = 1e-12);

std::vector<Point> sample_grid(const BaseSystem& base, int count);

struct Castle {
  double alpha = 0.0;
  std::vector<Interval> base_cells;
  std::vector<int> heights;
  // Floors of tower c are base_cells[c] translated by j·α for j < heights[c].
  Interval floor(int cell, int level) const;
  double total_length() const;
  Interval base_span() const;  // the union of the cells, itself an arc
  double offset = 0.0;          // start of the base arc
};

// Convergent denominators q_0=1, q_1, ... of α, up to the first exceeding limit.
std::vector<long> convergent_denominators(double alpha, long limit);

Castle build_castle(const BaseSystem& base, int n);

// Brute-force first return of x to the arc, up to max_steps (−1 if none).
long first_return(const BaseSystem& base, const Interval& arc, double x, long max_steps);

long visit_count(const BaseSystem& base, const std::vector<Interval>& v, const Point& x, long n);

}  // namespace conflab
