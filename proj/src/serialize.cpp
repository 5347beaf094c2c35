#include "conflab/serialize.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "conflab/errors.hpp"
#include "conflab/patch.hpp"

namespace conflab {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), Reason::config, where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    require(ok, Reason::config, where + ": unknown key '" + key + "'");
  }
}

namespace {

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  require(j.contains(key), Reason::config, where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(Reason::config, where + ": bad value for '" + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

Interval interval_from_json(const json& j) {
  require(j.is_array() && j.size() == 2, Reason::config, "interval: expected [a, b]");
  const double a = j[0].get<double>(), b = j[1].get<double>();
  require(b > a && b - a <= 1.0, Reason::config, "interval: need a < b <= a + 1");
  return {a, b - a};
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  json a = json::array();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  return a;
}

Matrix matrix_from_json(const json& j, int dim) {
  require(j.is_array() && static_cast<int>(j.size()) == dim * dim, Reason::config,
          "matrix: expected " + std::to_string(dim * dim) + " row-major entries");
  Matrix m(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) {
      require(j[r * dim + c].is_number(), Reason::config, "matrix: non-numeric entry");
      m(r, c) = j[r * dim + c].get<double>();
    }
  return m;
}

BaseSystem base_from_json(const json& j) {
  check_keys(j, {"type", "alpha"}, "base");
  const auto type = get<std::string>(j, "type", "base");
  if (type == "rotation") return BaseSystem::rotation(get<double>(j, "alpha", "base"));
  if (type == "torus") return BaseSystem::torus(get<std::vector<double>>(j, "alpha", "base"));
  fail(Reason::config, "base: unknown type '" + type + "'");
}

GeneratorPtr generator_from_json(const json& j, int dim) {
  require(j.is_object(), Reason::config, "generator: expected an object");
  const auto family = get<std::string>(j, "family", "generator");
  if (family == "constant") {
    check_keys(j, {"family", "matrix"}, "generator");
    return std::make_shared<const ConstantGenerator>(matrix_from_json(j.at("matrix"), dim));
  }
  if (family == "rotation_scale") {
    check_keys(j, {"family", "lambda"}, "generator");
    require(dim == 2, Reason::config, "rotation_scale is two-dimensional");
    return std::make_shared<const RotationScaleGenerator>(get<double>(j, "lambda", "generator"));
  }
  if (family == "schrodinger") {
    check_keys(j, {"family", "energy"}, "generator");
    require(dim == 2, Reason::config, "schrodinger is two-dimensional");
    return std::make_shared<const SchrodingerGenerator>(get<double>(j, "energy", "generator"));
  }
  if (family == "table") {
    check_keys(j, {"family", "samples"}, "generator");
    std::vector<Matrix> samples;
    for (const auto& s : j.at("samples")) samples.push_back(matrix_from_json(s, dim));
    return std::make_shared<const TableGenerator>(std::move(samples));
  }
  if (family == "blended") {
    check_keys(j, {"family", "original", "bumps"}, "generator");
    const Cocycle original = cocycle_from_json(j.at("original"));
    require(original.dim() == dim, Reason::config, "blended: dimension mismatch");
    std::vector<Bump> bumps;
    for (const auto& b : j.at("bumps")) {
      check_keys(b, {"cell", "plateau", "replacement_window"}, "bump");
      Bump bump{interval_from_json(b.at("cell")), interval_from_json(b.at("plateau")), {}};
      bump.cell.a = frac(bump.cell.a);
      bump.plateau.a = frac(bump.plateau.a);
      for (const auto& m : b.at("replacement_window")) bump.window.push_back(matrix_from_json(m, dim));
      bumps.push_back(std::move(bump));
    }
    return std::make_shared<const BlendedGenerator>(original, std::move(bumps));
  }
  if (family == "block_patch") {
    check_keys(j, {"family", "original", "samples", "blocks"}, "generator");
    const Cocycle original = cocycle_from_json(j.at("original"));
    const int samples = get<int>(j, "samples", "block_patch");
    std::vector<BlockPatchGenerator::Block> blocks;
    for (const auto& b : j.at("blocks")) {
      check_keys(b, {"dim", "frame_here", "frame_next", "restricted", "patched"}, "block");
      const int k = get<int>(b, "dim", "block");
      BlockPatchGenerator::Block blk;
      auto frame = [&](const json& e) {
        require(e.is_array() && static_cast<int>(e.size()) == dim * k, Reason::config, "block: bad frame");
        Matrix f(dim, k);
        for (int r = 0; r < dim; ++r)
          for (int c = 0; c < k; ++c) f(r, c) = e[r * k + c].get<double>();
        return f;
      };
      for (const auto& e : b.at("frame_here")) blk.frame_here.push_back(frame(e));
      for (const auto& e : b.at("frame_next")) blk.frame_next.push_back(frame(e));
      blk.restricted = generator_from_json(b.at("restricted"), k);
      blk.patched = generator_from_json(b.at("patched"), k);
      blocks.push_back(std::move(blk));
    }
    return std::make_shared<const BlockPatchGenerator>(original, samples, std::move(blocks));
  }
  fail(Reason::config, "generator: unknown family '" + family + "'");
}

Cocycle cocycle_from_json(const json& j) {
  check_keys(j, {"base", "generator", "dimension"}, "cocycle");
  const BaseSystem base = base_from_json(j.at("base"));
  int dim = 2;
  if (j.contains("dimension")) {
    dim = get<int>(j, "dimension", "cocycle");
  } else {
    const auto& g = j.at("generator");
    if (g.contains("matrix")) dim = static_cast<int>(std::lround(std::sqrt(double(g.at("matrix").size()))));
    if (g.contains("original")) dim = cocycle_from_json(g.at("original")).dim();
    if (g.contains("samples") && g.at("samples").is_array() && !g.at("samples").empty())
      dim = static_cast<int>(std::lround(std::sqrt(double(g.at("samples")[0].size()))));
  }
  return Cocycle(base, generator_from_json(j.at("generator"), dim));
}

RunConfig parse_config(const json& j) {
  check_keys(j, {"dimension", "base", "generator", "horizons", "epsilon", "seed", "output"}, "config");
  RunConfig c;
  c.dimension = get<int>(j, "dimension", "config");
  require(c.dimension >= 1 && c.dimension <= kMaxDim, Reason::config, "config: dimension out of range");
  require(j.contains("base") && j.contains("generator"), Reason::config, "config: base and generator are required");
  c.base = j.at("base");
  c.generator = j.at("generator");
  if (j.contains("horizons")) {
    const auto& h = j.at("horizons");
    check_keys(h, {"n", "grid_size", "detection_horizon"}, "horizons");
    c.n = get_or<int>(h, "n", c.n, "horizons");
    c.grid_size = get_or<int>(h, "grid_size", c.grid_size, "horizons");
    c.detection_horizon = get_or<int>(h, "detection_horizon", c.detection_horizon, "horizons");
  }
  c.epsilon = get_or<double>(j, "epsilon", c.epsilon, "config");
  c.seed = get_or<long>(j, "seed", c.seed, "config");
  c.output = get_or<std::string>(j, "output", c.output, "config");
  require(c.n >= 1 && c.grid_size >= 1 && c.detection_horizon >= 1, Reason::config, "config: horizons must be >= 1");
  require(c.epsilon > 0.0, Reason::config, "config: epsilon must be positive");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Reason::config, "config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(Reason::config, std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

json config_to_json(const RunConfig& c) {
  return {{"dimension", c.dimension},
          {"base", c.base},
          {"generator", c.generator},
          {"horizons", {{"n", c.n}, {"grid_size", c.grid_size}, {"detection_horizon", c.detection_horizon}}},
          {"epsilon", c.epsilon},
          {"seed", c.seed},
          {"output", c.output}};
}

Cocycle build_cocycle(const RunConfig& c) {
  return Cocycle(base_from_json(c.base), generator_from_json(c.generator, c.dimension));
}

json to_json(const SingularData& s) {
  return {{"dim", s.dim},   {"lambdas", s.lambdas}, {"sigmas", s.sigmas},
          {"gammas", s.gammas}, {"zeta", s.zeta},   {"kappa", s.kappa}};
}

json to_json(const DominationReport& r) {
  json fits = json::array();
  for (const auto& f : r.fits)
    fits.push_back({{"index", f.index},
                    {"gap_rate", f.gap_rate},
                    {"tau_estimate", f.tau_estimate},
                    {"c_estimate", f.c_estimate},
                    {"r_squared", f.r_squared},
                    {"dominated", f.dominated}});
  return {{"dim", r.dim},           {"horizon", r.horizon}, {"grid_size", r.grid_size},
          {"threshold", r.threshold}, {"fits", fits},       {"indices", r.indices}};
}

json to_json(const SplittingFrame& f) {
  return {{"dims", f.dims},
          {"indices", f.indices},
          {"points", f.points.size()},
          {"horizon", f.horizon},
          {"equivariance_defect", f.equivariance_defect},
          {"worst_point", f.worst_point}};
}

json to_json(const PerturbationPlan& p) {
  json maps = json::array();
  for (const auto& m : p.maps) maps.push_back(matrix_to_json(m));
  return {{"anchor", p.anchor.x()},
          {"n", p.n},
          {"k", p.k},
          {"m0", p.m0},
          {"i0", p.i0},
          {"epsilon", p.epsilon},
          {"maps", maps},
          {"zeta_before", p.zeta_before},
          {"zeta_after", p.zeta_after},
          {"z_estimate", p.z_estimate},
          {"target", p.target},
          {"corner", p.corner},
          {"delta", p.delta},
          {"max_deviation", p.max_deviation},
          {"certificate", p.certificate}};
}

PerturbationPlan plan_from_json(const json& j, const Cocycle& a) {
  check_keys(j,
             {"anchor", "n", "k", "m0", "i0", "epsilon", "maps", "zeta_before", "zeta_after", "z_estimate", "target",
              "corner", "delta", "max_deviation", "certificate"},
             "plan");
  PerturbationPlan p;
  p.anchor = Point(get<double>(j, "anchor", "plan"));
  p.n = get<int>(j, "n", "plan");
  p.k = get<int>(j, "k", "plan");
  p.m0 = get<int>(j, "m0", "plan");
  p.i0 = get_or<int>(j, "i0", 0, "plan");
  p.epsilon = get<double>(j, "epsilon", "plan");
  for (const auto& m : j.at("maps")) p.maps.push_back(matrix_from_json(m, a.dim()));
  p.zeta_before = get<double>(j, "zeta_before", "plan");
  p.zeta_after = get<double>(j, "zeta_after", "plan");
  p.z_estimate = get_or<double>(j, "z_estimate", 0.0, "plan");
  p.target = get_or<double>(j, "target", 0.0, "plan");
  p.corner = get_or<double>(j, "corner", 0.0, "plan");
  p.delta = get_or<double>(j, "delta", 0.0, "plan");
  p.max_deviation = get_or<double>(j, "max_deviation", 0.0, "plan");
  p.certificate = get_or<std::string>(j, "certificate", "", "plan");
  require(static_cast<int>(p.maps.size()) == p.n, Reason::config, "plan: map count differs from n");
  const double dev = plan_deviation(a, p.anchor, p.maps);
  require(dev < p.epsilon, Reason::budget, "plan: stored maps deviate by " + std::to_string(dev) + " >= epsilon");
  for (const auto& m : p.maps) require(invertible(m), Reason::invalid_matrix, "plan: stored map is singular");
  return p;
}

std::string dump(const json& j) { return j.dump(2); }

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  require(out.good(), Reason::config, "cannot write " + path);
  out << text << '\n';
}

}  // namespace conflab
