#include "conflab/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "conflab/errors.hpp"
#include "conflab/subspace.hpp"

namespace conflab {

namespace {

kernels::SpectrumFunctional functional_of(Functional f, int sigma_index) {
  switch (f) {
    case Functional::zeta:
      return [](std::span<const double> l, std::span<double> out) { out[0] = zeta_from_logs(l); };
    case Functional::kappa:
      return [](std::span<const double> l, std::span<double> out) { out[0] = l.front() - l.back(); };
    case Functional::sigma:
      return [sigma_index](std::span<const double> l, std::span<double> out) {
        double s = 0.0;
        for (int i = 0; i < sigma_index; ++i) s += l[i];
        out[0] = s;
      };
  }
  fail(Reason::internal, "unknown functional");
}

}  // namespace

DistortionSeries distortion_series(const Cocycle& a, Functional f, const std::vector<int>& horizons, int grid_size,
                                   int sigma_index) {
  if (f == Functional::sigma)
    require(sigma_index >= 1 && sigma_index <= a.dim(), Reason::argument, "sigma index out of range");
  const auto grid = sample_grid(a.base(), grid_size);
  const auto stats = kernels::sweep(a, grid, horizons, 1, functional_of(f, sigma_index));
  DistortionSeries s;
  s.horizons = horizons;
  s.grid_size = grid_size;
  for (size_t h = 0; h < horizons.size(); ++h) {
    s.sup_rate.push_back(stats.max_at(static_cast<int>(h)) / horizons[h]);
    s.avg_rate.push_back(stats.mean_at(static_cast<int>(h)) / horizons[h]);
  }
  return s;
}

double estimate_Z(const Cocycle& a, int n, int grid_size) {
  require(n >= 1, Reason::argument, "estimate_Z: n must be positive");
  return distortion_series(a, Functional::zeta, {n}, grid_size).final_rate();
}

double estimate_K(const Cocycle& a, int n, int grid_size) {
  require(n >= 1, Reason::argument, "estimate_K: n must be positive");
  return distortion_series(a, Functional::kappa, {n}, grid_size).final_rate();
}

std::vector<double> lyapunov_spectrum(const Cocycle& a, const Point& x, int n) {
  require(n >= 1, Reason::argument, "lyapunov_spectrum: n must be positive");
  const auto p = a.product(x, n);
  std::vector<double> chi(a.dim());
  for (int i = 0; i < a.dim(); ++i) chi[i] = p.log_value(i) / n;
  return chi;
}

SusaetResult susaet_check(const Cocycle& a, Functional f, int n, int grid_size, int sigma_index) {
  const auto s = distortion_series(a, f, {n}, grid_size, sigma_index);
  return {s.sup_rate.back(), s.avg_rate.back()};
}

DominationReport detect_domination(const Cocycle& a, int horizon, int grid_size) {
  require(horizon >= 10, Reason::argument, "detect_domination: horizon must be at least 10");
  const int d = a.dim();
  DominationReport rep;
  rep.dim = d;
  rep.horizon = horizon;
  rep.grid_size = grid_size;
  rep.threshold = kDominationThreshold;
  if (d < 2) return rep;
  std::vector<int> hs;
  for (int h = horizon / 2; h <= horizon; ++h) hs.push_back(h);
  const auto grid = sample_grid(a.base(), grid_size);
  const auto stats = kernels::sweep(a, grid, hs, d - 1, [](std::span<const double> l, std::span<double> out) {
    for (size_t i = 0; i + 1 < l.size(); ++i) out[i] = l[i] - l[i + 1];
  });
  const double m = static_cast<double>(hs.size());
  for (int i = 1; i < d; ++i) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t h = 0; h < hs.size(); ++h) {
      const double x = hs[h], y = stats.min_at(static_cast<int>(h), i - 1);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double icept = (sy - slope * sx) / m;
    double ss_res = 0, ss_tot = 0;
    for (size_t h = 0; h < hs.size(); ++h) {
      const double y = stats.min_at(static_cast<int>(h), i - 1);
      ss_res += std::pow(y - (icept + slope * hs[h]), 2);
      ss_tot += std::pow(y - sy / m, 2);
    }
    const double r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0;
    IndexFit fit{i, slope, std::exp(slope), icept, r2, slope > kDominationThreshold && r2 > kDominationR2};
    rep.fits.push_back(fit);
    if (fit.dominated) rep.indices.push_back(i);
  }
  return rep;
}

namespace {

SplittingFrame trivial_frame(const Cocycle& a, int count, int horizon) {
  SplittingFrame f;
  f.points = sample_grid(a.base(), count);
  f.dims = {a.dim()};
  f.horizon = horizon;
  const Matrix id = Matrix::Identity(a.dim(), a.dim());
  f.bases.assign(count, {id});
  return f;
}

void measure_equivariance(const Cocycle& a, SplittingFrame& f) {
  f.equivariance_defect = 0.0;
  f.worst_point = 0;
  for (size_t j = 0; j + 1 < f.points.size(); ++j) {
    const Matrix m = a(f.points[j]);
    for (int b = 0; b < f.bundles(); ++b) {
      const double ang = max_principal_angle(orthonormalize(Matrix(m * f.bases[j][b])), f.bases[j + 1][b]);
      if (ang > f.equivariance_defect) {
        f.equivariance_defect = ang;
        f.worst_point = static_cast<int>(j);
      }
    }
  }
}

}  // namespace

SplittingFrame finest_splitting(const Cocycle& a, const DominationReport& report, int horizon, int count) {
  require(count >= 2, Reason::argument, "finest_splitting: need at least two points");
  require(horizon >= 1, Reason::argument, "finest_splitting: horizon must be positive");
  if (report.indices.empty()) return trivial_frame(a, count, horizon);
  const int d = a.dim();
  SplittingFrame f;
  f.points = sample_grid(a.base(), count);
  f.horizon = horizon;
  f.indices = report.indices;
  std::vector<int> cuts{0};
  for (int i : report.indices) cuts.push_back(i);
  cuts.push_back(d);
  for (size_t j = 0; j + 1 < cuts.size(); ++j) f.dims.push_back(cuts[j + 1] - cuts[j]);
  f.bases.resize(count);

#pragma omp parallel for schedule(dynamic, 8)
  for (long p = 0; p < count; ++p) {
    const Point& y = f.points[p];
    const ScaledProduct fwd = a.product(y, horizon);
    const ScaledProduct bwd = a.product(a.base().step(y, -horizon), horizon);
    std::vector<Matrix> frames;
    for (size_t j = 0; j + 1 < cuts.size(); ++j) {
      const int lo = cuts[j], hi = cuts[j + 1];
      const Matrix fast = bwd.left_vectors().leftCols(hi);
      const Matrix slow = fwd.right_vectors().rightCols(d - lo);
      frames.push_back(intersect(fast, slow, hi - lo));
    }
    f.bases[p] = std::move(frames);
  }
  // Fix each bundle's basis by projecting the first point's frame, so neighbouring
  // points get nearby bases.
  const auto reference = f.bases[0];
  for (auto& frames : f.bases)
    for (int b = 0; b < f.bundles(); ++b) frames[b] = canonical_basis(frames[b], reference[b]);

  measure_equivariance(a, f);
  require(f.equivariance_defect <= kEquivarianceTol, Reason::non_convergence,
          "finest_splitting: equivariance defect " + std::to_string(f.equivariance_defect) + " at point " +
              std::to_string(f.worst_point) + " (x = " + std::to_string(f.points[f.worst_point].x()) + ")");
  return f;
}

SplittingFrame finest_splitting(const Cocycle& a, const DominationReport& report, int horizon) {
  return finest_splitting(a, report, horizon, report.grid_size > 1 ? report.grid_size : kDefaultGrid);
}

SplittingFrame continuation_match(const SplittingFrame& old, const Cocycle& a_new, int horizon) {
  const int count = static_cast<int>(old.points.size());
  const auto rep = detect_domination(a_new, horizon, count);
  SplittingFrame nf;
  try {
    nf = finest_splitting(a_new, rep, horizon, count);
  } catch (const Error& e) {
    fail(Reason::continuation_failure, std::string("continuation_match: ") + e.what());
  }
  require(nf.dims == old.dims, Reason::continuation_failure,
          "continuation_match: bundle dimensions changed under the perturbation");
  // Bundles of a dominated splitting come ordered; the match is by position,
  // confirmed by angles.
  constexpr double kMargin = 0.5;
  for (int p = 0; p < count; ++p)
    for (int b = 0; b < nf.bundles(); ++b) {
      const double ang = max_principal_angle(nf.bases[p][b], old.bases[p][b]);
      require(ang < kMargin, Reason::continuation_failure,
              "continuation_match: bundle " + std::to_string(b + 1) + " moved by " + std::to_string(ang) +
                  " rad at point " + std::to_string(p));
    }
  return nf;
}

std::vector<Matrix> restricted_maps(const Cocycle& a, const SplittingFrame& frame, int bundle) {
  const size_t m = frame.points.size();
  std::vector<Matrix> out(m - 1);
  for (size_t j = 0; j + 1 < m; ++j)
    out[j] = frame.bases[j + 1][bundle].transpose() * a(frame.points[j]) * frame.bases[j][bundle];
  return out;
}

namespace {

double fine_rate(const Cocycle& a, const SplittingFrame& frame, int n, bool zeta) {
  require(n >= 1, Reason::argument, "fine estimate: n must be positive");
  const long m = static_cast<long>(frame.points.size());
  require(m > n, Reason::argument, "fine estimate: frame shorter than the horizon");
  require(frame.equivariance_defect <= kEquivarianceTol, Reason::invalid_frame,
          "fine estimate: frame equivariance defect above tolerance");
  double best = 0.0;
  for (int b = 0; b < frame.bundles(); ++b) {
    if (frame.dims[b] == 1) continue;  // lines are conformal
    const auto maps = restricted_maps(a, frame, b);
    const long starts = m - n;
    std::vector<double> rate(starts);
#pragma omp parallel for schedule(dynamic, 16)
    for (long g = 0; g < starts; ++g) {
      ScaledProduct p(frame.dims[b]);
      for (int j = 0; j < n; ++j) p.left_multiply(maps[g + j]);
      const auto l = p.log_values();
      rate[g] = zeta ? p.singular_data().zeta / n : (l(0) - l(frame.dims[b] - 1)) / n;
    }
    for (double r : rate) best = std::max(best, r);
  }
  return best;
}

}  // namespace

double estimate_Z_fine(const Cocycle& a, const SplittingFrame& frame, int n) { return fine_rate(a, frame, n, true); }
double estimate_K_fine(const Cocycle& a, const SplittingFrame& frame, int n) { return fine_rate(a, frame, n, false); }

}  // namespace conflab
