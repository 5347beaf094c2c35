#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "conflab/errors.hpp"
#include "conflab/perturb.hpp"
#include "conflab/subspace.hpp"

namespace conflab {

namespace {

// Keeps the greedy step strictly inside the angle budget.
constexpr double kStepShrink = 1.0 - 1e-6;
constexpr double kCornerTol = 1e-8;
constexpr int kMergeAttempts = 24;

Vector some_perpendicular(const Vector& a) {
  const int d = static_cast<int>(a.size());
  int best = 0;
  for (int r = 1; r < d; ++r)
    if (std::abs(a(r)) < std::abs(a(best))) best = r;
  Vector e = Vector::Zero(d);
  e(best) = 1.0;
  e -= e.dot(a) * a;
  return e.normalized();
}

// Rotates unit a toward t by at most `step` inside span(a, t).
Vector rotate_toward(const Vector& a, const Vector& t, double step) {
  const Vector th = t.normalized();
  const double phi = vector_angle(a, th);
  if (phi <= step) return th;
  Vector e2 = th - th.dot(a) * a;
  e2 = e2.norm() > 1e-300 ? Vector(e2.normalized()) : some_perpendicular(a);
  return std::cos(step) * a + std::sin(step) * e2;
}

}  // namespace

double angle_budget(double epsilon, double c) { return std::min(epsilon / (1.25 * c), 0.1); }

double chain_log_ratio(std::span<const Matrix> maps, const Vector& v, const Vector& w) {
  double lv = 0.0, lw = 0.0;
  Vector a = v.normalized(), b = w.normalized();
  for (const auto& m : maps) {
    a = m * a;
    b = m * b;
    const double na = a.norm(), nb = b.norm();
    lv += std::log(na);
    lw += std::log(nb);
    a /= na;
    b /= nb;
  }
  return lw - lv;
}

std::vector<Vector> chain_vectors(std::span<const Matrix> maps, const Vector& v, const Vector& w, double alpha) {
  const int k = static_cast<int>(maps.size());
  require(k >= 1, Reason::argument, "chain_vectors: need at least one map");
  require(alpha > 0.0, Reason::argument, "chain_vectors: angle budget must be positive");
  require(v.norm() > 0.0 && w.norm() > 0.0, Reason::argument, "chain_vectors: zero vector");
  require(chain_log_ratio(maps, v, w) > std::log(0.5), Reason::hypothesis_violation,
          "chain_vectors: growth ratio of w against v is not above 1/2");
  const double step = alpha * kStepShrink;
  std::vector<Vector> u(k + 1);
  u[0] = v;
  Vector cur = v.normalized();
  Vector target = w;
  for (int j = 0; j < k; ++j) {
    const Vector img = (maps[j] * cur).normalized();
    target = maps[j] * target;
    if (j == k - 1) {
      u[k] = target;
    } else {
      cur = rotate_toward(img, target, step);
      u[j + 1] = cur;
    }
  }
  for (int j = 0; j < k; ++j) {
    const double ang = vector_angle(u[j + 1], maps[j] * u[j]);
    require(ang < alpha, Reason::hypothesis_violation,
            "chain_vectors: chain of length " + std::to_string(k) + " too short for the angle budget");
  }
  return u;
}

int chain_length(double c, double alpha) {
  require(c >= 1.0 && alpha > 0.0, Reason::argument, "chain_length: need C >= 1 and alpha > 0");
  Matrix expand = Matrix::Zero(2, 2), shrink = Matrix::Zero(2, 2);
  expand(0, 0) = c;
  expand(1, 1) = 1.0 / c;
  shrink(0, 0) = 1.0 / c;
  shrink(1, 1) = c;
  Vector e1 = Vector::Zero(2), e2 = Vector::Zero(2);
  e1(0) = 1.0;
  e2(1) = 1.0;
  auto passes = [&](const std::vector<Matrix>& maps) {
    try {
      chain_vectors(maps, e1, e2, alpha);
      return true;
    } catch (const Error&) {
      return false;
    }
  };
  const int start = std::max(1, static_cast<int>(std::floor(std::numbers::pi / 2.0 / alpha)));
  for (int k = start; k < 100000; ++k) {
    // Identity maps at a right angle, then a push away from the target undone later.
    if (!passes(std::vector<Matrix>(k, Matrix::Identity(2, 2)))) continue;
    std::vector<Matrix> stress(k, Matrix::Identity(2, 2));
    for (int j = 0; j < k / 2; ++j) {
      stress[j] = expand;
      stress[k - 1 - j] = shrink;
    }
    if (passes(stress)) return k;
  }
  fail(Reason::internal, "chain_length: no admissible chain length");
}

double window_log_threshold(double c, int k, int m) {
  return 2.0 * k * std::log(c) + (double(m) / k - 1.0) * std::log(0.5);
}

double window_log_ratio(const Cocycle& a, const Point& x, int i, int m) {
  const auto p = a.product(x, m);
  return p.log_value(i) - p.log_value(i - 1);
}

Window find_window(const Cocycle& a, int i, double epsilon, int m_max, int grid_size) {
  const int d = a.dim();
  require(i >= 1 && i < d, Reason::argument, "find_window: index out of range");
  require(epsilon > 0.0, Reason::argument, "find_window: epsilon must be positive");
  Window w;
  w.index = i;
  // Directions only feel the distortion of each step; the budget feels the norm.
  w.c = a.distortion_bound();
  w.alpha = angle_budget(epsilon, a.norm_bound());
  w.k = chain_length(w.c, w.alpha);
  w.grid_size = grid_size;
  require(m_max > w.k, Reason::argument, "find_window: m_max must exceed the chain length");
  std::vector<int> hs(m_max - w.k);
  std::iota(hs.begin(), hs.end(), w.k + 1);
  const auto grid = sample_grid(a.base(), grid_size);
  const auto stats = kernels::sweep(a, grid, hs, 1, [i](std::span<const double> l, std::span<double> out) {
    out[0] = l[i] - l[i - 1];
  });
  for (size_t h = 0; h < hs.size(); ++h) {
    const double thr = window_log_threshold(w.c, w.k, hs[h]);
    if (stats.max_at(static_cast<int>(h)) > thr) {
      w.m = hs[h];
      w.log_threshold = thr;
      break;
    }
  }
  require(w.m > 0, Reason::domination_detected,
          "find_window: W(m) empty for every m <= " + std::to_string(m_max) + " at index " + std::to_string(i));
  const auto lam = kernels::lambdas_at(a, grid, w.m);
  for (int g = 0; g < grid_size; ++g)
    if (lam[g][i] - lam[g][i - 1] > w.log_threshold) w.members.push_back(g);
  return w;
}

double splice_corner(std::span<const Matrix> maps, int split, const Matrix& e, const Matrix& f) {
  Matrix h = orthonormalize(e);
  for (int j = 0; j < split; ++j) h = orthonormalize(Matrix(maps[j] * h));
  Matrix g = orthonormalize(f);
  for (int j = static_cast<int>(maps.size()) - 1; j >= split; --j)
    g = orthonormalize(Matrix(maps[j].partialPivLu().solve(g)));
  return subspace_corner(h, g);
}

MergeResult merge_subspaces(const Cocycle& a, const Point& x, const Window& win, const Matrix& e, const Matrix& f,
                            double epsilon) {
  const int d = a.dim(), i = win.index, m = win.m, k = win.k;
  require(e.rows() == d && e.cols() == i, Reason::argument, "merge_subspaces: E must be i-dimensional");
  require(f.rows() == d && f.cols() == d - i, Reason::argument, "merge_subspaces: F must be (d-i)-dimensional");
  require(m > k && k >= 1, Reason::argument, "merge_subspaces: window shorter than the chain");
  std::vector<Matrix> base(m);
  for (int j = 0; j < m; ++j) base[j] = a(a.base().step(x, j));

  MergeResult res;
  res.corner = splice_corner(base, m, e, f);
  if (res.corner <= kCornerTol) {
    res.maps = base;
    return res;
  }

  ScaledProduct p(d);
  for (const auto& b : base) p.left_multiply(b);
  const Matrix& pu = p.left_vectors();
  const Matrix& pv = p.right_vectors();

  // v in E with ‖Pv‖ ≤ s_i(P).
  const Vector v = intersect(orthonormalize(e), pv.rightCols(d - i + 1), 1).col(0);
  // f* in F with P⁻¹f* inside the top i+1 right singular directions.
  const Matrix fo = orthonormalize(f);
  const Matrix coords = pu.transpose() * fo;
  Vector y = Vector::Zero(d - i);
  y(0) = 1.0;
  if (d - i - 1 > 0) {
    Eigen::JacobiSVD<Matrix> svd(Matrix(coords.bottomRows(d - i - 1)), Eigen::ComputeFullV);
    y = svd.matrixV().col(d - i - 1);
  }
  const Vector fstar = (fo * y).normalized();

  std::vector<Vector> fv(m + 1), bw(m + 1);
  std::vector<double> lv(m + 1, 0.0), lb(m + 1, 0.0);
  fv[0] = v;
  for (int j = 0; j < m; ++j) {
    Vector t = base[j] * fv[j];
    const double nt = t.norm();
    lv[j + 1] = lv[j] + std::log(nt);
    fv[j + 1] = t / nt;
  }
  bw[m] = fstar;
  for (int j = m - 1; j >= 0; --j) {
    Vector t = base[j].partialPivLu().solve(bw[j + 1]);
    const double nt = t.norm();
    lb[j] = lb[j + 1] + std::log(nt);
    bw[j] = t / nt;
  }
  // Growth of w over [ℓ, ℓ+k] is lb[ℓ] - lb[ℓ+k] since lb counts backward.
  std::vector<std::pair<double, int>> cands;
  for (int ell = 0; ell + k <= m && ell < m - k; ++ell) {
    const double r = (lb[ell] - lb[ell + k]) - (lv[ell + k] - lv[ell]);
    if (r > std::log(0.5)) cands.push_back({-r, ell});
  }
  require(!cands.empty(), Reason::internal_contradiction,
          "merge_subspaces: no sub-window with growth ratio above 1/2 (point not in W(m))");
  std::sort(cands.begin(), cands.end());

  bool budget_hit = false;
  std::string last;
  int attempts = 0;
  for (const auto& [neg, ell] : cands) {
    if (++attempts > kMergeAttempts) break;
    const Vector& vv = fv[ell];
    Vector ww = bw[ell];
    if (vv.dot(ww) < 0) ww = -ww;
    std::vector<Vector> chain;
    try {
      chain = chain_vectors(std::span<const Matrix>(base.data() + ell, k), vv, ww, win.alpha);
    } catch (const Error& err) {
      last = err.what();
      continue;
    }
    std::vector<Matrix> maps = base;
    double dev = 0.0;
    for (int j = 0; j < k; ++j) {
      const Matrix& aj = base[ell + j];
      maps[ell + j] = plane_rotation(aj * chain[j], chain[j + 1]) * aj;
      dev = std::max(dev, operator_norm(Matrix(maps[ell + j] - aj)));
    }
    if (dev >= epsilon) {
      budget_hit = true;
      last = "rotations exceed the budget";
      continue;
    }
    const double corner = splice_corner(maps, ell + k, e, f);
    if (corner > kCornerTol) {
      last = "corner witness " + std::to_string(corner);
      continue;
    }
    res.maps = std::move(maps);
    res.ell = ell;
    res.corner = corner;
    res.max_deviation = dev;
    return res;
  }
  if (budget_hit)
    fail(Reason::hypothesis_violation, "merge_subspaces: angle corrections exceed epsilon = " + std::to_string(epsilon));
  fail(Reason::internal_contradiction, "merge_subspaces: no sub-window produced a valid merge (" + last + ")");
}

BvFrames bv_subspaces(const ScaledProduct& p, const ScaledProduct& q, int i) {
  const int d = p.dim();
  require(q.dim() == d, Reason::argument, "bv_subspaces: dimension mismatch");
  require(i >= 1 && i < d, Reason::argument, "bv_subspaces: index out of range");
  BvFrames out;
  out.degenerate = std::abs(p.log_value(i - 1) - p.log_value(i)) < 1e-12 ||
                   std::abs(q.log_value(i - 1) - q.log_value(i)) < 1e-12;
  if (out.degenerate) {
    const Matrix id = Matrix::Identity(d, d);
    out.e = id.leftCols(i);
    out.f = id.rightCols(d - i);
    return out;
  }
  out.e = orthonormalize(p.left_vectors().leftCols(i));
  out.f = orthonormalize(q.right_vectors().rightCols(d - i));
  return out;
}

BvFrames bv_subspaces(const Matrix& p, const Matrix& q, int i) {
  return bv_subspaces(ScaledProduct::from_matrix(p), ScaledProduct::from_matrix(q), i);
}

double exterior_corner(const Matrix& r, int i, const Matrix& e, const Matrix& f) {
  const int d = static_cast<int>(r.rows());
  require(i >= 1 && i < d, Reason::argument, "exterior_corner: index out of range");
  require(e.rows() == d && e.cols() == i && f.rows() == d && f.cols() == d - i, Reason::argument,
          "exterior_corner: frame dimensions must be i and d-i");
  require(is_orthonormal(e) && is_orthonormal(f), Reason::argument, "exterior_corner: frames must be orthonormal");
  return subspace_corner(Matrix(r * e), f);
}

BvCheck bv_bound_check(const Matrix& p, const Matrix& r, const Matrix& q, int i) {
  const int d = static_cast<int>(p.rows());
  const auto frames = bv_subspaces(p, q, i);
  const double corner = exterior_corner(r, i, frames.e, frames.f);
  require(corner <= kCornerTol, Reason::argument,
          "bv_bound_check: R does not send a vector of E into F (corner " + std::to_string(corner) + ")");
  ScaledProduct prod = ScaledProduct::from_matrix(p);
  prod.left_multiply(r);
  prod.left_multiply(q);
  const auto sp = singular_data(p), sq = singular_data(q);
  const auto c = dimension_constants(d);
  BvCheck out;
  out.lhs = prod.singular_data().sigma(i);
  out.rhs = sp.sigma(i) + sq.sigma(i) - 2.0 * std::min(sp.gamma(i), sq.gamma(i)) +
            c.c * std::max(1.0, log_norm(r));
  out.holds = out.lhs <= out.rhs + 1e-8;
  return out;
}

}  // namespace conflab
