// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all selected pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conflab/analysis.hpp"
#include "conflab/dynamics.hpp"
#include "conflab/errors.hpp"
#include "conflab/patch.hpp"
#include "conflab/perturb.hpp"
#include "conflab/subspace.hpp"
#include "conflab/verify.hpp"

using namespace conflab;

namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

BaseSystem golden() { return BaseSystem::rotation(kGolden); }

Cocycle constant(const Matrix& m) { return Cocycle(golden(), std::make_shared<ConstantGenerator>(m)); }
Cocycle rotation_scale(double lambda) { return Cocycle(golden(), std::make_shared<RotationScaleGenerator>(lambda)); }
Cocycle schrodinger(double e) { return Cocycle(golden(), std::make_shared<SchrodingerGenerator>(e)); }

Matrix diag(std::initializer_list<double> v) {
  Matrix m = Matrix::Zero(static_cast<int>(v.size()), static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) m(i, i) = x, ++i;
  return m;
}

Matrix block_example() { return block_diag({4.0 * rotation2(0.7), rotation2(1.3)}); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Outcome identity_suite() {
  Rng rng(101);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int d = 2; d <= 6; ++d)
    for (int s = 0; s < 1000; ++s) {
      const auto sd = singular_data(random_matrix(rng, d));
      double sum = 0.0;
      for (int i = 1; i < d; ++i) sum += double(i) * (d - i) * sd.gamma(i);
      worst = std::max(worst, std::abs(sd.zeta - sum));
    }
  const double t = seconds_since(t0);
  return {worst <= 1e-10 && t < 10.0, fmt("max residual %.3g, %.2f s", worst, t)};
}

Outcome gap_bound() {
  Rng rng(101);  // same samples as the identity suite
  int violations = 0;
  double worst = INFINITY;
  for (int d = 2; d <= 6; ++d) {
    const double b = dimension_constants(d).b;
    for (int s = 0; s < 1000; ++s) {
      const auto sd = singular_data(random_matrix(rng, d));
      const double slack = max_half_gap(sd).value - b * sd.zeta;
      worst = std::min(worst, slack);
      // In d = 2 the bound is an equality, so only rounding-level shortfalls are tolerated.
      if (slack < -1e-12 * std::max(1.0, sd.zeta)) ++violations;
    }
  }
  return {violations == 0, fmt("%d violations, min slack %.3g", violations, worst)};
}

Outcome exterior_norm() {
  Rng rng(103);
  double worst = 0.0;
  for (int d = 2; d <= 6; ++d)
    for (int s = 0; s < 200; ++s) {
      const Matrix m = random_matrix(rng, d);
      const auto sd = singular_data(m);
      for (int i = 1; i <= d; ++i) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(exterior_power(m, i));
        const double want = std::exp(sd.sigma(i));
        worst = std::max(worst, std::abs(svd.singularValues()(0) - want) / want);
      }
    }
  return {worst <= 1e-8, fmt("max relative error %.3g", worst)};
}

Outcome subadditivity() {
  Rng rng(104);
  double excess = -INFINITY, zeta_excess = -INFINITY, det = 0.0;
  for (int d = 2; d <= 6; ++d)
    for (int s = 0; s < 1000; ++s) {
      const Matrix a = random_matrix(rng, d), b = random_matrix(rng, d);
      const auto sa = singular_data(a), sb = singular_data(b), sab = singular_data(Matrix(a * b));
      for (int i = 1; i < d; ++i) excess = std::max(excess, sab.sigma(i) - sa.sigma(i) - sb.sigma(i));
      zeta_excess = std::max(zeta_excess, sab.zeta - sa.zeta - sb.zeta);
      det = std::max(det, std::abs(sab.sigma(d) - sa.sigma(d) - sb.sigma(d)));
    }
  return {excess <= 1e-9 && zeta_excess <= 1e-9 && det <= 1e-9,
          fmt("sigma excess %.3g, zeta excess %.3g, det defect %.3g", excess, zeta_excess, det)};
}

Outcome closed_forms() {
  const auto t0 = std::chrono::steady_clock::now();
  const Cocycle a = constant(diag({2.0, 0.5}));
  const double k = estimate_K(a, 1000), z = estimate_Z(a, 1000);
  const double t = seconds_since(t0);
  const bool ok = std::abs(k - 2.0 * std::log(2.0)) <= 1e-3 && std::abs(z - std::log(2.0)) <= 1e-3 && t < 5.0;
  return {ok, fmt("K %.6f, Z %.6f, %.2f s", k, z, t)};
}

Outcome domination() {
  const auto t0 = std::chrono::steady_clock::now();
  const int horizon = 500, grid = 512;
  const auto tau = [](const DominationReport& r, int i) {
    for (const auto& f : r.fits)
      if (f.index == i) return f.tau_estimate;
    return 0.0;
  };
  const auto diag_rep = detect_domination(constant(diag({2.0, 1.0})), horizon, grid);
  const auto rot_rep = detect_domination(rotation_scale(1.0), horizon, grid);
  const auto blk_rep = detect_domination(constant(block_example()), horizon, grid);
  const double t = seconds_since(t0);
  const double t1 = tau(diag_rep, 1), t2 = tau(blk_rep, 2);
  const bool ok = diag_rep.indices == std::vector<int>{1} && t1 >= 1.9 && t1 <= 2.1 && rot_rep.indices.empty() &&
                  blk_rep.indices == std::vector<int>{2} && t2 >= 3.8 && t2 <= 4.2 && t < 30.0;
  return {ok, fmt("diag tau %.4f, rotation %zu indices, block %zu indices tau %.4f, %.1f s", t1, rot_rep.indices.size(),
                  blk_rep.indices.size(), t2, t)};
}

Outcome ordering() {
  struct Family {
    std::string name;
    Cocycle a;
  };
  std::vector<Family> fams{{"rotation_scale 1.0", rotation_scale(1.0)},
                           {"rotation_scale 1.2", rotation_scale(1.2)},
                           {"diag(2,1/2)", constant(diag({2.0, 0.5}))},
                           {"diag(4,2,1)", constant(diag({4.0, 2.0, 1.0}))},
                           {"schrodinger 5", schrodinger(5.0)},
                           {"block", constant(block_example())}};
  const int n = 300, grid = 512;
  double worst = -INFINITY;
  std::string worst_name;
  for (const auto& f : fams) {
    const auto rep = detect_domination(f.a, 300, grid);
    const auto frame = finest_splitting(f.a, rep, 300, grid + n);
    const double dz = estimate_Z_fine(f.a, frame, n) - estimate_Z(f.a, n, grid);
    const double dk = estimate_K_fine(f.a, frame, n) - estimate_K(f.a, n, grid);
    if (std::max(dz, dk) > worst) worst = std::max(dz, dk), worst_name = f.name;
  }
  return {worst <= 1e-6, fmt("%zu families, worst fine-minus-coarse %.3g (%s)", fams.size(), worst, worst_name.c_str())};
}

// Independent witness: E pushed to ℓ, F pulled back to ℓ+k, product of the k merged maps in between.
double merged_corner(const MergeResult& res, int k, const Matrix& e, const Matrix& f, int i) {
  const int m = static_cast<int>(res.maps.size());
  const int ell = res.ell < 0 ? m - k : res.ell;
  Matrix h = orthonormalize(e);
  for (int j = 0; j < ell; ++j) h = orthonormalize(Matrix(res.maps[j] * h));
  Matrix g = orthonormalize(f);
  for (int j = m - 1; j >= ell + k; --j) g = orthonormalize(Matrix(res.maps[j].partialPivLu().solve(g)));
  Matrix r = Matrix::Identity(e.rows(), e.rows());
  for (int j = ell; j < ell + k; ++j) r = res.maps[j] * r;
  return exterior_corner(r, i, h, g);
}

Outcome corner_witness() {
  Rng rng(108);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  int runs = 0, failures = 0, bad = 0;
  double worst = 0.0;
  const double eps = 0.5;
  for (double lambda : {1.05, 1.1, 1.15, 1.2}) {
    const Cocycle a = rotation_scale(lambda);
    const auto w = find_window(a, 1, eps, kDefaultWindowMax, 512);
    const auto grid = sample_grid(a.base(), 512);
    // About fifteen E/F pairs per family, spread over the window members.
    const int pairs = static_cast<int>((15 + w.members.size() - 1) / w.members.size());
    for (int member : w.members) {
      const Point x = grid[member];
      for (int t = 0; t < pairs; ++t) {
        const Matrix e = rotation2(angle(rng)).leftCols(1);
        const Matrix f = rotation2(angle(rng)).leftCols(1);
        try {
          const auto res = merge_subspaces(a, x, w, e, f, eps);
          ++runs;
          const double c = merged_corner(res, w.k, e, f, 1);
          worst = std::max(worst, c);
          if (c > 1e-8) ++bad;
        } catch (const Error&) {
          ++failures;
        }
      }
    }
  }
  return {runs >= 50 && bad == 0,
          fmt("%d merges (%d refused), %d corners above 1e-8, worst %.3g", runs, failures, bad, worst)};
}

Outcome bv_inequality() {
  Rng rng(109);
  std::normal_distribution<double> g(0.0, 1.5);
  int checks = 0, violations = 0;
  double min_slack = INFINITY;
  for (int d : {2, 3})
    for (int t = 0; t < 100; ++t) {
      // P and Q with spread-out singular values, R forced to send part of E into F.
      std::vector<double> lp(d), lq(d);
      for (auto& v : lp) v = g(rng);
      for (auto& v : lq) v = g(rng);
      Matrix p = random_orthogonal(rng, d) * Matrix(Vector(Eigen::Map<Vector>(lp.data(), d).array().exp()).asDiagonal()) *
                 random_orthogonal(rng, d);
      Matrix q = random_orthogonal(rng, d) * Matrix(Vector(Eigen::Map<Vector>(lq.data(), d).array().exp()).asDiagonal()) *
                 random_orthogonal(rng, d);
      const Matrix mix = random_matrix(rng, d);
      for (int i = 1; i < d; ++i) {
        const auto fr = bv_subspaces(p, q, i);
        const Matrix r = plane_rotation(mix * fr.e.col(0), fr.f.col(0)) * mix;
        const auto chk = bv_bound_check(p, r, q, i);
        ++checks;
        min_slack = std::min(min_slack, chk.rhs - chk.lhs);
        if (!chk.holds) ++violations;
      }
    }
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  const double a = 2.0, b = 1.0;
  const auto closed = bv_bound_check(diag({std::exp(a), std::exp(-a)}), swap, diag({std::exp(b), std::exp(-b)}), 1);
  const bool closed_ok = std::abs(closed.lhs - std::abs(a - b)) <= 1e-10 && closed.holds;
  return {violations == 0 && closed_ok,
          fmt("%d checks, %d violations, min slack %.3g, closed form %.12f", checks, violations, min_slack, closed.lhs)};
}

Outcome segment_drop() {
  const auto t0 = std::chrono::steady_clock::now();
  const Cocycle a = rotation_scale(1.2);
  const double eps = 0.5;
  const int n = 2000;
  const SegmentPerturber sp(a, eps);
  std::mt19937_64 rng(110);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int ok = 0, errors = 0;
  double worst_after = 0.0, worst_dev = 0.0, target = 0.0;
  for (int t = 0; t < 20; ++t) {
    try {
      const auto plan = sp.plan(Point(u(rng)), n);
      target = sp.constants().a * plan.z_estimate + eps;
      worst_after = std::max(worst_after, plan.zeta_after);
      worst_dev = std::max(worst_dev, plan.max_deviation);
      if (plan.zeta_after < target && plan.max_deviation < eps) ++ok;
    } catch (const Error&) {
      ++errors;
    }
  }
  const double t = seconds_since(t0);
  return {ok >= 18 && t < 120.0, fmt("%d/20 anchors (%d errors), worst zeta/n %.4f vs %.4f, worst deviation %.4f, %.1f s",
                                     ok, errors, worst_after, target, worst_dev, t)};
}

Outcome global_drop() {
  const auto t0 = std::chrono::steady_clock::now();
  const Cocycle a = rotation_scale(1.2);
  const double eps = 0.5;
  const auto rep = conformalize(a, eps, 2000);
  double dev = 0.0;
  for (const auto& x : sample_grid(a.base(), kDefaultGrid))
    dev = std::max(dev, operator_norm(Matrix((*rep.cocycle)(x) - a(x))));
  const double bound = dimension_constants(2).a * rep.z_before + eps;
  const double t = seconds_since(t0);
  return {rep.z_after < bound && dev < eps && t < 300.0,
          fmt("Z %.5f -> %.5f (bound %.4f), %d/%d cells perturbed, deviation %.4f, %.1f s", rep.z_before, rep.z_after,
              bound, rep.perturbed_cells, rep.cells, dev, t)};
}

Outcome iterated_decay() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> schedule;
  for (int r = 0; r < 5; ++r) schedule.push_back(0.3 * std::pow(2.0 / 3.0, r));
  IterateOptions opts;
  opts.conformalize.grid_size = 1024;
  opts.conformalize.perturb.grid_size = 1024;
  opts.conformalize.eval_horizon = 2000;
  opts.detection_horizon = 500;
  const auto res = iterate_conformalize(rotation_scale(1.2), schedule, 5, opts);
  const double start = res.z_fine_start;
  const double end = res.rounds.empty() ? NAN : res.rounds.back().z_fine_after;
  bool envelopes = !res.rounds.empty();
  for (const auto& r : res.rounds) envelopes = envelopes && r.under_envelope;
  const bool ok = !res.halted && res.rounds.size() == 5 && start >= 0.36 && end < 0.15 && envelopes;
  std::string detail = fmt("%zu rounds, Z_fine start %.5f (needs >= 0.36), end %.5f, envelopes %s, %.1f s",
                           res.rounds.size(), start, end, envelopes ? "held" : "missed", seconds_since(t0));
  if (res.halted) detail += "; halted: " + res.halt_message;
  return {ok, detail};
}

Outcome semi_uniform() {
  const auto r = susaet_check(schrodinger(5.0), Functional::kappa, 2000);
  const double rel = std::abs(r.sup_side - r.avg_side) / r.sup_side;
  return {rel <= 0.05, fmt("sup %.6f, avg %.6f, relative gap %.3g", r.sup_side, r.avg_side, rel)};
}

Outcome castle_returns() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto base = golden();
  std::mt19937_64 rng(114);
  int mismatches = 0, checked = 0;
  for (int n : {5, 13, 34}) {
    const auto c = build_castle(base, n);
    const auto span = c.base_span();
    std::uniform_real_distribution<double> u(0.0, span.len);
    for (int s = 0; s < 100; ++s) {
      const double x = frac(span.a + u(rng));
      int cell = -1;
      for (size_t k = 0; k < c.base_cells.size(); ++k)
        if (c.base_cells[k].contains(x)) cell = static_cast<int>(k);
      ++checked;
      if (cell < 0 || first_return(base, span, x, 100L * n) != c.heights[cell]) ++mismatches;
    }
  }
  const double t = seconds_since(t0);
  return {mismatches == 0 && t < 5.0, fmt("%d points, %d mismatches, %.3f s", checked, mismatches, t)};
}

Outcome weight_identity() {
  Rng rng(115);
  std::normal_distribution<double> g(0.0, 2.0);
  double worst = 0.0;
  int samples = 0;
  for (int d = 3; d <= 6; ++d)
    for (int s = 0; s < 250; ++s, ++samples) {
      std::vector<double> l(d);
      double mean = 0.0;
      for (auto& x : l) mean += (x = g(rng)) / d;
      for (auto& x : l) x -= mean;
      const auto sd = singular_data_from_logs(l);
      for (int i0 = 1; i0 < d; ++i0) {
        const auto u = zeta_gap_weights(d, i0);
        double rhs = 0.0;
        for (int i = 1; i < d; ++i) rhs += u[i - 1] * sd.sigma(i);
        worst = std::max(worst, std::abs(sd.zeta + sd.gamma(i0) - rhs));
      }
    }
  return {worst <= 1e-10, fmt("%d samples, max residual %.3g", samples, worst)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "identity suite", identity_suite},
      {2, "gap bound", gap_bound},
      {3, "exterior-power norm", exterior_norm},
      {4, "subadditivity", subadditivity},
      {5, "constant-cocycle closed forms", closed_forms},
      {6, "domination detection", domination},
      {7, "fine estimates below coarse", ordering},
      {8, "corner witness after merges", corner_witness},
      {9, "bounded-variation inequality", bv_inequality},
      {10, "segment drop", segment_drop},
      {11, "global drop", global_drop},
      {12, "iterated decay", iterated_decay},
      {13, "semi-uniform ergodic averages", semi_uniform},
      {14, "castle return times", castle_returns},
      {15, "weight identity", weight_identity},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "criteria to run (default: all)")->check(CLI::Range(1, 15));
  CLI11_PARSE(app, argc, argv);

  int failed = 0;
  for (const auto& c : criteria()) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const Error& e) {
      o = {false, std::string("error [") + std::string(e.code()) + "]: " + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
