#include "conflab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "conflab/errors.hpp"

namespace conflab {

double frac(double x) {
  double f = x - std::floor(x);
  return f >= 1.0 ? 0.0 : f;
}

double circle_distance(double a, double b) {
  const double d = frac(a - b);
  return std::min(d, 1.0 - d);
}

namespace {

// frac(x + n·α) with the product carried in extended precision.
double advance(double x, double alpha, long n) {
  long double t = static_cast<long double>(n) * static_cast<long double>(alpha);
  t -= std::floor(t);
  long double r = static_cast<long double>(x) + t;
  r -= std::floor(r);
  double out = static_cast<double>(r);
  return out >= 1.0 ? 0.0 : out;
}

}  // namespace

bool near_rational(double x, long max_q, double tol) {
  for (long q = 1; q <= max_q; ++q) {
    const double qx = q * x;
    if (std::abs(qx - std::round(qx)) < tol * q) return true;
  }
  return false;
}

BaseSystem BaseSystem::rotation(double alpha) {
  require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0, Reason::config,
          "rotation number must lie in (0,1)");
  require(!near_rational(alpha), Reason::config, "rotation number is numerically rational");
  BaseSystem b;
  b.kind_ = Kind::circle_rotation;
  b.alpha_ = {alpha};
  return b;
}

BaseSystem BaseSystem::torus(const std::vector<double>& alpha) {
  require(!alpha.empty() && alpha.size() <= kMaxTorusDim, Reason::config,
          "torus translation needs 1.." + std::to_string(kMaxTorusDim) + " components");
  for (double a : alpha) {
    require(std::isfinite(a) && a > 0.0 && a < 1.0, Reason::config, "translation components must lie in (0,1)");
    require(!near_rational(a), Reason::config, "translation component is numerically rational");
  }
  // Small integer relations between pairs are the practical failure mode.
  for (size_t i = 0; i < alpha.size(); ++i)
    for (size_t j = i + 1; j < alpha.size(); ++j)
      for (int p = -20; p <= 20; ++p)
        for (int q = 1; q <= 20; ++q) {
          if (p == 0) continue;
          const double v = p * alpha[i] + q * alpha[j];
          require(std::abs(v - std::round(v)) > 1e-9, Reason::config,
                  "translation components are rationally dependent");
        }
  BaseSystem b;
  b.kind_ = Kind::torus_translation;
  b.alpha_ = alpha;
  return b;
}

Point BaseSystem::step(const Point& x, long n) const {
  Point y;
  y.dim = dim();
  for (int i = 0; i < dim(); ++i) y.c[i] = advance(x.c[i], alpha_[i], n);
  return y;
}

Point BaseSystem::origin() const {
  Point p;
  p.dim = dim();
  return p;
}

double BaseSystem::distance(const Point& a, const Point& b) const {
  double m = 0.0;
  for (int i = 0; i < dim(); ++i) m = std::max(m, circle_distance(a.c[i], b.c[i]));
  return m;
}

std::vector<Point> sample_grid(const BaseSystem& base, int count) {
  require(count >= 1, Reason::argument, "sample_grid: count must be positive");
  std::vector<Point> pts(count);
  const Point o = base.origin();
  for (int j = 0; j < count; ++j) pts[j] = base.step(o, j);
  return pts;
}

std::vector<long> convergent_denominators(double alpha, long limit) {
  std::vector<long> q{1};
  long prev = 0;
  long double x = alpha;
  while (q.back() <= limit) {
    x = 1.0L / x;
    const long a = static_cast<long>(std::floor(x));
    x -= a;
    const long next = a * q.back() + prev;
    prev = q.back();
    q.push_back(next);
    if (x < 1e-15L) break;
  }
  return q;
}

Interval Castle::floor(int cell, int level) const { return base_cells[cell].shifted(level * alpha); }

double Castle::total_length() const {
  double t = 0.0;
  for (size_t c = 0; c < base_cells.size(); ++c) t += base_cells[c].len * heights[c];
  return t;
}

Interval Castle::base_span() const {
  double len = 0.0;
  for (const auto& c : base_cells) len += c.len;
  return {offset, len};
}

long first_return(const BaseSystem& base, const Interval& arc, double x, long max_steps) {
  const double alpha = base.alpha()[0];
  for (long j = 1; j <= max_steps; ++j)
    if (arc.contains(advance(x, alpha, j))) return j;
  return -1;
}

namespace {

// An offset whose distance to the first 10^6 orbit points of 0 (and the few
// backward ones the cell cuts reach) stays clear of rounding.
double pick_offset(double alpha, long back) {
  const double candidates[] = {3.7e-7, 7.3e-7, 1.13e-6, 2.9e-6, 5.3e-6, 1.07e-5};
  constexpr long kForward = 1000000;
  for (double s : candidates) {
    double closest = 1.0;
    for (long t = -back; t <= kForward; ++t) closest = std::min(closest, circle_distance(s, advance(0.0, alpha, t)));
    if (closest > 1e-10) return s;
  }
  fail(Reason::internal, "build_castle: no clean base offset found");
}

}  // namespace

Castle build_castle(const BaseSystem& base, int n) {
  require(base.kind() == BaseSystem::Kind::circle_rotation, Reason::unsupported,
          "castle construction is implemented for circle rotations only");
  require(n >= 1, Reason::argument, "build_castle: N must be at least 1");
  const double alpha = base.alpha()[0];
  Castle castle;
  castle.alpha = alpha;
  if (n == 1) {
    castle.offset = pick_offset(alpha, 1);
    castle.base_cells = {{castle.offset, 1.0}};
    castle.heights = {1};
    return castle;
  }
  const auto q = convergent_denominators(alpha, n);
  size_t k = 0;
  while (q[k] < n) ++k;
  const long qk = q[k], qprev = k > 0 ? q[k - 1] : 0;
  const double len = circle_distance(advance(0.0, alpha, qprev), 0.0);
  const long h_max = qk + qprev;
  const double s = pick_offset(alpha, h_max + 1);
  castle.offset = s;
  const Interval arc{s, len};

  // Return time is constant between preimages of the arc endpoints.
  std::vector<double> cuts{0.0, len};
  for (long j = 1; j <= h_max; ++j) {
    for (double e : {s, s + len}) {
      const double off = arc.offset(advance(e, alpha, -j));
      if (off > 1e-15 && off < len - 1e-15) cuts.push_back(off);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return b - a < 1e-14; }), cuts.end());

  for (size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double mid = frac(s + 0.5 * (cuts[c] + cuts[c + 1]));
    const long h = first_return(base, arc, mid, h_max);
    require(h >= n, Reason::internal, "build_castle: return time below N");
    const Interval cell{frac(s + cuts[c]), cuts[c + 1] - cuts[c]};
    if (!castle.heights.empty() && castle.heights.back() == h) {
      castle.base_cells.back().len += cell.len;
    } else {
      castle.base_cells.push_back(cell);
      castle.heights.push_back(static_cast<int>(h));
    }
  }
  require(std::abs(castle.total_length() - 1.0) < 1e-9, Reason::internal, "build_castle: floors do not tile the circle");
  return castle;
}

long visit_count(const BaseSystem& base, const std::vector<Interval>& v, const Point& x, long n) {
  long count = 0;
  for (long j = 0; j < n; ++j) {
    const double y = base.step(x, j).x();
    for (const auto& arc : v)
      if (arc.contains(y)) {
        ++count;
        break;
      }
  }
  return count;
}

}  // namespace conflab
