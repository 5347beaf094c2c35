#include "conflab/patch.hpp"

#include <algorithm>
#include <cmath>

#include "conflab/errors.hpp"
#include "conflab/subspace.hpp"

namespace conflab {

namespace {

json interval_json(const Interval& iv) { return json::array({iv.a, iv.end()}); }

json matrix_json(const Matrix& m) {
  json a = json::array();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  return a;
}

}  // namespace

double bump_weight(const Bump& b, double offset) {
  const double len = b.cell.len;
  const double p0 = b.cell.offset(b.plateau.a);
  const double p1 = p0 + b.plateau.len;
  if (offset < 0.0 || offset >= len) return 0.0;
  if (offset < p0) return offset / p0;
  if (offset <= p1) return 1.0;
  return (len - offset) / (len - p1);
}

BlendedGenerator::BlendedGenerator(Cocycle original, std::vector<Bump> bumps)
    : original_(std::move(original)), bumps_(std::move(bumps)) {
  require(original_.base().kind() == BaseSystem::Kind::circle_rotation, Reason::unsupported,
          "blended cocycle: circle base required");
  const double alpha = original_.base().alpha()[0];
  for (size_t b = 0; b < bumps_.size(); ++b) {
    const auto& bump = bumps_[b];
    require(!bump.window.empty(), Reason::config, "blended cocycle: bump without replacement maps");
    require(bump.cell.len > 0.0 && bump.cell.len < 1.0, Reason::config, "blended cocycle: bad cell");
    const double p0 = bump.cell.offset(bump.plateau.a);
    require(p0 > 0.0 && p0 + bump.plateau.len < bump.cell.len, Reason::config,
            "blended cocycle: plateau must sit strictly inside its cell");
    for (const auto& m : bump.window)
      require(m.rows() == original_.dim() && m.cols() == original_.dim(), Reason::config,
              "blended cocycle: replacement of wrong size");
    for (size_t j = 0; j < bump.window.size(); ++j) {
      const Interval f = bump.cell.shifted(double(j) * alpha);
      floors_.push_back({f.a, f.len, static_cast<int>(b), static_cast<int>(j)});
    }
  }
  std::sort(floors_.begin(), floors_.end(), [](const Floor& x, const Floor& y) { return x.start < y.start; });
  for (size_t f = 0; f < floors_.size(); ++f) {
    const auto& cur = floors_[f];
    const auto& nxt = floors_[(f + 1) % floors_.size()];
    if (floors_.size() > 1) {
      const double gap = frac(nxt.start - cur.start);
      require(cur.len <= gap + 1e-12, Reason::config, "blended cocycle: bump floors overlap");
    }
  }
}

BlendedGenerator::Weights BlendedGenerator::weights(double x) const {
  Weights w;
  if (floors_.empty()) return w;
  auto it = std::upper_bound(floors_.begin(), floors_.end(), x, [](double v, const Floor& f) { return v < f.start; });
  const Floor& f = it == floors_.begin() ? floors_.back() : *(it - 1);
  const double off = frac(x - f.start);
  if (off >= f.len) return w;
  w.phi = bump_weight(bumps_[f.bump], off);
  w.psi = 1.0 - w.phi;
  w.bump = f.bump;
  w.floor = f.level;
  return w;
}

Matrix BlendedGenerator::eval(const Point& x) const {
  const Weights w = weights(x.x());
  if (w.bump < 0 || w.phi == 0.0) return original_(x);
  const Matrix& rep = bumps_[w.bump].window[w.floor];
  if (w.phi == 1.0) return rep;
  return w.psi * original_(x) + w.phi * rep;
}

Matrix blended_eval(const BlendedGenerator& b, const Point& x) {
  Matrix m = b.eval(x);
  require(m.allFinite() && invertible(m), Reason::internal,
          "blended_eval: singular blend at x = " + std::to_string(x.x()));
  return m;
}

json BlendedGenerator::to_json() const {
  json bumps = json::array();
  for (const auto& b : bumps_) {
    json win = json::array();
    for (const auto& m : b.window) win.push_back(matrix_json(m));
    bumps.push_back({{"cell", interval_json(b.cell)}, {"plateau", interval_json(b.plateau)}, {"replacement_window", win}});
  }
  return {{"family", "blended"}, {"original", original_.to_json()}, {"bumps", bumps}};
}

BlockPatchGenerator::BlockPatchGenerator(Cocycle original, int samples, std::vector<Block> blocks)
    : original_(std::move(original)), samples_(samples), blocks_(std::move(blocks)) {
  for (const auto& b : blocks_)
    require(static_cast<int>(b.frame_here.size()) == samples_ && static_cast<int>(b.frame_next.size()) == samples_,
            Reason::config, "block patch: frame tables must match the sample count");
}

Matrix BlockPatchGenerator::eval(const Point& x) const {
  Matrix m = original_(x);
  int s = static_cast<int>(std::lround(x.x() * samples_));
  if (s >= samples_) s -= samples_;
  for (const auto& b : blocks_) {
    const Matrix delta = b.patched->eval(x) - b.restricted->eval(x);
    m += b.frame_next[s] * delta * b.frame_here[s].transpose();
  }
  return m;
}

json BlockPatchGenerator::to_json() const {
  json blocks = json::array();
  for (const auto& b : blocks_) {
    json here = json::array(), next = json::array();
    for (const auto& e : b.frame_here) here.push_back(matrix_json(e));
    for (const auto& e : b.frame_next) next.push_back(matrix_json(e));
    blocks.push_back({{"dim", b.frame_here.front().cols()},
                      {"frame_here", here},
                      {"frame_next", next},
                      {"restricted", b.restricted->to_json()},
                      {"patched", b.patched->to_json()}});
  }
  return {{"family", "block_patch"}, {"original", original_.to_json()}, {"samples", samples_}, {"blocks", blocks}};
}

namespace {

// Largest dyadic ρ with ‖A(x+s) − A(x)‖ < tol for sampled x and s ≤ ρ.
double continuity_radius(const Cocycle& a, double tol, int grid_size) {
  const auto grid = sample_grid(a.base(), std::min(grid_size, 1024));
  for (double rho = 0.5; rho > 1e-9; rho *= 0.5) {
    bool ok = true;
    for (const auto& x : grid) {
      const Matrix ax = a(x);
      for (double s = rho; s >= rho / 8.0 && ok; s *= 0.5)
        ok = operator_norm(Matrix(a(Point(frac(x.x() + s))) - ax)) < tol;
      if (!ok) break;
    }
    if (ok) return rho;
  }
  fail(Reason::budget, "conformalize: generator varies too fast for the budget (no continuity radius)");
}

}  // namespace

ConformalizeReport conformalize(const Cocycle& a, double epsilon, int n, ConformalizeOptions opts) {
  require(a.base().kind() == BaseSystem::Kind::circle_rotation, Reason::unsupported,
          "conformalize: castle patching needs a circle rotation base");
  require(epsilon > 0.0, Reason::argument, "conformalize: epsilon must be positive");
  require(epsilon < a.min_mininorm(), Reason::budget,
          "conformalize: epsilon " + std::to_string(epsilon) + " not below the mininorm bound " +
              std::to_string(a.min_mininorm()));
  require(n >= 1, Reason::argument, "conformalize: N must be positive");
  ConformalizeReport rep;
  rep.epsilon = epsilon;
  rep.epsilon_main = epsilon * opts.main_fraction;
  const auto consts = dimension_constants(a.dim());
  rep.z_before = estimate_Z(a, opts.eval_horizon, opts.grid_size);
  rep.target = consts.a * rep.z_before + epsilon;

  SegmentPerturber perturber(a, rep.epsilon_main, opts.perturb);
  // Tower heights must clear the perturber's minimum at their own length.
  int need = std::max(n, perturber.min_length(n));
  Castle castle;
  for (int tries = 0;; ++tries) {
    castle = build_castle(a.base(), need);
    int next = need;
    for (int h : castle.heights) next = std::max(next, perturber.min_length(h));
    if (next == need) break;
    require(tries < 8, Reason::non_convergence, "conformalize: castle height does not settle");
    need = next;
  }
  rep.castle = castle;
  rep.n_required = need;
  rep.rho = continuity_radius(a, rep.epsilon_main, opts.grid_size);
  rep.collar_frac = std::min(0.05, rep.epsilon_main / (4.0 * (need + 1)));

  struct Cell {
    Interval iv;
    int height;
  };
  std::vector<Cell> cells;
  for (size_t c = 0; c < castle.base_cells.size(); ++c) {
    const auto& base = castle.base_cells[c];
    const int parts = std::max(1, static_cast<int>(std::ceil(base.len / rep.rho)));
    for (int p = 0; p < parts; ++p)
      cells.push_back({{frac(base.a + base.len * p / parts), base.len / parts}, castle.heights[c]});
  }
  rep.cells = static_cast<int>(cells.size());

  std::vector<std::optional<Bump>> bumps(cells.size());
  bool failed = false;
  Error first(Reason::internal, "");
#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < static_cast<long>(cells.size()); ++c) {
    try {
      const auto& cell = cells[c];
      const Point y(frac(cell.iv.a + 0.5 * cell.iv.len));
      const auto plan = perturber.plan(y, cell.height);
      if (!plan.early_exit()) {
        const double col = rep.collar_frac * cell.iv.len;
        bumps[c] = Bump{cell.iv, {frac(cell.iv.a + col), cell.iv.len - 2.0 * col}, plan.maps};
      }
    } catch (const Error& e) {
#pragma omp critical
      {
        if (!failed) first = Error(e.reason(), "cell " + std::to_string(c) + ": " + e.what());
        failed = true;
      }
    }
  }
  if (failed) throw first;
  std::vector<Bump> kept;
  for (auto& b : bumps)
    if (b) kept.push_back(std::move(*b));
  rep.perturbed_cells = static_cast<int>(kept.size());

  rep.blended = std::make_shared<const BlendedGenerator>(a, std::move(kept));
  rep.cocycle.emplace(a.base(), rep.blended);
  for (const auto& x : sample_grid(a.base(), opts.grid_size)) {
    const Matrix m = blended_eval(*rep.blended, x);
    rep.max_deviation = std::max(rep.max_deviation, operator_norm(Matrix(m - a(x))));
  }
  require(rep.max_deviation < epsilon, Reason::internal,
          "conformalize: blended deviation " + std::to_string(rep.max_deviation) + " exceeds epsilon");
  rep.z_after = estimate_Z(*rep.cocycle, opts.eval_horizon, opts.grid_size);
  return rep;
}

namespace {

// Frames of the splitting at arbitrary points, bases fixed against `reference`.
std::vector<std::vector<Matrix>> frames_at(const Cocycle& a, const std::vector<int>& indices, int horizon,
                                           const std::vector<Point>& points,
                                           const std::vector<Matrix>& reference) {
  const int d = a.dim();
  std::vector<int> cuts{0};
  cuts.insert(cuts.end(), indices.begin(), indices.end());
  cuts.push_back(d);
  std::vector<std::vector<Matrix>> out(points.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (long p = 0; p < static_cast<long>(points.size()); ++p) {
    const ScaledProduct fwd = a.product(points[p], horizon);
    const ScaledProduct bwd = a.product(a.base().step(points[p], -horizon), horizon);
    for (size_t j = 0; j + 1 < cuts.size(); ++j) {
      const Matrix e = intersect(bwd.left_vectors().leftCols(cuts[j + 1]), fwd.right_vectors().rightCols(d - cuts[j]),
                                 cuts[j + 1] - cuts[j]);
      out[p].push_back(canonical_basis(e, reference[j]));
    }
  }
  return out;
}

double measure_z_fine(const Cocycle& a, const IterateOptions& opts) {
  const int n = opts.conformalize.eval_horizon;
  const int grid = opts.conformalize.grid_size;
  const auto rep = detect_domination(a, opts.detection_horizon, grid);
  const auto frame = finest_splitting(a, rep, opts.detection_horizon, grid + n);
  return estimate_Z_fine(a, frame, n);
}

}  // namespace

IterationResult iterate_conformalize(const Cocycle& a, const std::vector<double>& schedule, int rounds,
                                     IterateOptions opts) {
  require(rounds >= 1, Reason::argument, "iterate_conformalize: rounds must be positive");
  require(static_cast<int>(schedule.size()) == rounds, Reason::argument,
          "iterate_conformalize: schedule length must equal rounds");
  const auto consts = dimension_constants(a.dim());
  IterationResult res;
  Cocycle current = a;
  double z = 0.0;
  try {
    z = measure_z_fine(current, opts);
  } catch (const Error& e) {
    res.halted = true;
    res.halt_reason = e.reason();
    res.halt_message = e.what();
    return res;
  }
  res.z_fine_start = z;
  const int grid = opts.conformalize.grid_size;
  for (int r = 0; r < rounds; ++r) {
    RoundRecord rec;
    rec.round = r;
    rec.epsilon = schedule[r];
    rec.z_fine_before = z;
    rec.envelope = consts.a * z + schedule[r];
    try {
      const auto rep = detect_domination(current, opts.detection_horizon, grid);
      rec.indices = rep.indices;
      const int n = opts.n > 0 ? opts.n : 1;
      std::optional<Cocycle> next;
      if (rep.indices.empty()) {
        auto conf = conformalize(current, schedule[r], n, opts.conformalize);
        rec.blended = conf.blended->to_json();
        next = *conf.cocycle;
      } else {
        const int samples = grid;
        const auto probe = finest_splitting(current, rep, opts.detection_horizon, 2);
        std::vector<Point> here(samples), there(samples);
        for (int s = 0; s < samples; ++s) {
          here[s] = Point(double(s) / samples);
          there[s] = current.base().step(here[s], 1);
        }
        const auto fh = frames_at(current, rep.indices, opts.detection_horizon, here, probe.bases[0]);
        const auto fn = frames_at(current, rep.indices, opts.detection_horizon, there, probe.bases[0]);
        int wide = 0;
        for (int dim : probe.dims) wide += dim > 1 ? 1 : 0;
        std::vector<BlockPatchGenerator::Block> blocks;
        json block_json = json::array();
        for (int b = 0; b < probe.bundles(); ++b) {
          if (probe.dims[b] == 1) continue;  // lines are already conformal
          BlockPatchGenerator::Block blk;
          std::vector<Matrix> table(samples);
          for (int s = 0; s < samples; ++s) {
            blk.frame_here.push_back(fh[s][b]);
            blk.frame_next.push_back(fn[s][b]);
            table[s] = fn[s][b].transpose() * current(here[s]) * fh[s][b];
          }
          blk.restricted = std::make_shared<const TableGenerator>(table);
          const Cocycle restricted(current.base(), blk.restricted);
          auto conf = conformalize(restricted, schedule[r] / wide, n, opts.conformalize);
          blk.patched = conf.blended;
          block_json.push_back(conf.blended->to_json());
          blocks.push_back(std::move(blk));
        }
        auto gen = std::make_shared<const BlockPatchGenerator>(current, samples, std::move(blocks));
        rec.blended = gen->to_json();
        next.emplace(current.base(), gen);
      }
      current = *next;
      z = measure_z_fine(current, opts);
    } catch (const Error& e) {
      res.halted = true;
      res.halt_reason = e.reason();
      res.halt_message = "round " + std::to_string(r) + ": " + e.what();
      break;
    }
    rec.z_fine_after = z;
    rec.under_envelope = z < rec.envelope + 0.02;
    res.rounds.push_back(std::move(rec));
  }
  res.final_cocycle = current;
  return res;
}

AuditRecord good_point_audit(const Cocycle& blended, const BlendedGenerator& b, const Point& x, long n) {
  require(n >= 1, Reason::argument, "good_point_audit: n must be positive");
  const auto& base = blended.base();
  AuditRecord rec;
  std::vector<long> returns;
  std::vector<Matrix> maps(n);
  std::vector<bool> in_v(n);
  for (long t = 0; t < n; ++t) {
    const Point y = base.step(x, t);
    maps[t] = blended(y);
    const auto w = b.weights(y.x());
    in_v[t] = w.bump >= 0 && w.phi < 1.0;
    for (const auto& bump : b.bumps())
      if (bump.cell.contains(y.x())) {
        returns.push_back(t);
        break;
      }
  }
  auto step_zeta = [&](long t) { return singular_data(maps[t]).zeta; };
  double c0 = 0.0;
  for (const auto& y : sample_grid(base, 1024)) c0 = std::max(c0, singular_data(blended(y)).zeta);
  std::vector<bool> covered(n, false);
  double ledger = 0.0;
  rec.p = returns.empty() ? n : returns.front();
  for (size_t j = 0; j + 1 < returns.size(); ++j) {
    const long lo = returns[j], hi = returns[j + 1];
    rec.segment_lengths.push_back(hi - lo);
    bool good = true;
    for (long t = lo; t < hi && good; ++t) good = !in_v[t];
    rec.good.push_back(good);
    if (good) {
      ++rec.good_count;
      ScaledProduct p(blended.dim());
      for (long t = lo; t < hi; ++t) {
        p.left_multiply(maps[t]);
        covered[t] = true;
      }
      ledger += p.singular_data().zeta;
    } else {
      ++rec.bad_count;
    }
  }
  rec.q = returns.empty() ? 0 : n - returns.back();
  for (long t = 0; t < n; ++t)
    if (!covered[t]) {
      ++rec.remainder;
      c0 = std::max(c0, step_zeta(t));
    }
  rec.c0 = c0;
  rec.ledger = ledger + c0 * rec.remainder;
  ScaledProduct full(blended.dim());
  for (const auto& m : maps) full.left_multiply(m);
  rec.measured = full.singular_data().zeta;
  return rec;
}

}  // namespace conflab
