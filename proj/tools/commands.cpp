#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "conflab/analysis.hpp"
#include "conflab/errors.hpp"
#include "conflab/patch.hpp"
#include "conflab/perturb.hpp"
#include "conflab/verify.hpp"

namespace conflab::cli {

namespace {

struct Setup {
  RunConfig config;
  std::string out;
};

Setup setup(const Options& o) {
  require(!o.config_path.empty(), Reason::config, "--config is required for this command");
  Setup s{load_config(o.config_path), ""};
  if (o.seed) s.config.seed = *o.seed;
  s.out = o.out ? *o.out : s.config.output;
  std::filesystem::create_directories(s.out);
  return s;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<int> doubling_horizons(int n) {
  std::vector<int> hs;
  for (int h = 1; h < n; h *= 2) hs.push_back(h);
  hs.push_back(n);
  return hs;
}

}  // namespace

int cmd_analyze(const Options& o) {
  const auto s = setup(o);
  const auto& c = s.config;
  const Cocycle a = build_cocycle(c);
  const int n = o.n.value_or(c.n);
  const auto hs = doubling_horizons(n);
  const auto zs = distortion_series(a, Functional::zeta, hs, c.grid_size);
  const auto ks = distortion_series(a, Functional::kappa, hs, c.grid_size);
  json z = json::array(), k = json::array();
  for (size_t h = 0; h < hs.size(); ++h) {
    z.push_back({{"n", hs[h]}, {"value", zs.sup_rate[h]}, {"average", zs.avg_rate[h]}});
    k.push_back({{"n", hs[h]}, {"value", ks.sup_rate[h]}, {"average", ks.avg_rate[h]}});
  }
  json report = {{"config", config_to_json(c)},
                 {"grid_size", c.grid_size},
                 {"bound_C", a.bound()},
                 {"norm_bound", a.norm_bound()},
                 {"distortion_bound", a.distortion_bound()},
                 {"K", k},
                 {"Z", z},
                 {"K_estimate", ks.final_rate()},
                 {"Z_estimate", zs.final_rate()},
                 {"lyapunov", lyapunov_spectrum(a, a.base().origin(), n)},
                 {"susaet",
                  {{"zeta", {{"sup", zs.sup_rate.back()}, {"avg", zs.avg_rate.back()}}},
                   {"kappa", {{"sup", ks.sup_rate.back()}, {"avg", ks.avg_rate.back()}}}}}};
  if (a.dim() >= 2) {
    const auto dom = detect_domination(a, c.detection_horizon, c.grid_size);
    report["domination"] = to_json(dom);
    if (!dom.indices.empty()) {
      const auto frame = finest_splitting(a, dom, c.detection_horizon, c.grid_size + n);
      report["splitting"] = to_json(frame);
      report["Z_fine"] = estimate_Z_fine(a, frame, n);
      report["K_fine"] = estimate_K_fine(a, frame, n);
    }
  }
  write_text(s.out + "/analysis.json", dump(report));

  std::ostringstream csv;
  csv << "x_index,n,i,sigma_i\n";
  const int shown = std::min(c.grid_size, 16);
  const auto grid = sample_grid(a.base(), shown);
  for (int g = 0; g < shown; ++g) {
    ScaledProduct p(a.dim());
    size_t next = 0;
    for (int j = 0; j < n; ++j) {
      p.left_multiply(a(a.base().step(grid[g], j)));
      if (j + 1 == hs[next]) {
        const auto sd = p.singular_data();
        for (int i = 0; i <= a.dim(); ++i) csv << g << ',' << hs[next] << ',' << i << ',' << num(sd.sigma(i)) << '\n';
        ++next;
      }
    }
  }
  write_text(s.out + "/sigma_graph.csv", csv.str());
  std::cout << "Z(" << n << ") = " << num(zs.final_rate()) << "  K(" << n << ") = " << num(ks.final_rate()) << '\n';
  return 0;
}

int cmd_perturb(const Options& o) {
  const auto s = setup(o);
  const auto& c = s.config;
  const Cocycle a = build_cocycle(c);
  require(a.dim() >= 2, Reason::config, "perturb needs dimension >= 2");
  const int n = o.n.value_or(c.n);
  PerturbOptions popts;
  popts.grid_size = c.grid_size;
  const SegmentPerturber perturber(a, c.epsilon, popts);
  Point x = a.base().origin();
  x.c[0] = frac(o.anchor.value_or(0.0));
  const auto plan = perturber.plan(x, n);
  write_text(s.out + "/plan.json", dump(to_json(plan)));
  const bool pass = plan.zeta_after < plan.target && plan.max_deviation < plan.epsilon;
  std::ostringstream sum;
  sum << "anchor          " << num(x.x()) << '\n'
      << "n               " << n << " (minimum " << perturber.min_length(n) << ")\n"
      << "certificate     " << plan.certificate << '\n'
      << "window          k = " << plan.k << ", m0 = " << plan.m0 << ", index " << plan.i0 << '\n'
      << "zeta before / n " << num(plan.zeta_before) << '\n'
      << "zeta after / n  " << num(plan.zeta_after) << '\n'
      << "target a*Z + e  " << num(plan.target) << "  (Z_est = " << num(plan.z_estimate) << ")\n"
      << "max deviation   " << num(plan.max_deviation) << " < " << num(plan.epsilon) << '\n'
      << "verdict         " << (pass ? "PASS" : "FAIL") << '\n';
  write_text(s.out + "/summary.txt", sum.str());
  std::cout << sum.str();
  return pass ? 0 : exit_code(Reason::drop_failure);
}

int cmd_conformalize(const Options& o) {
  const auto s = setup(o);
  const auto& c = s.config;
  const Cocycle a = build_cocycle(c);
  require(a.dim() >= 2, Reason::config, "conformalize needs dimension >= 2");
  require(o.rounds >= 1, Reason::argument, "--rounds must be positive");
  const auto consts = dimension_constants(a.dim());
  std::vector<double> schedule;
  for (int r = 0; r < o.rounds; ++r) schedule.push_back(c.epsilon * std::pow(consts.a, r));
  IterateOptions opts;
  opts.detection_horizon = c.detection_horizon;
  opts.conformalize.grid_size = c.grid_size;
  opts.conformalize.eval_horizon = o.n.value_or(c.n);
  opts.conformalize.perturb.grid_size = c.grid_size;
  const auto res = iterate_conformalize(a, schedule, o.rounds, opts);

  std::ostringstream csv;
  csv << "round,Z_fine,envelope\n";
  double env = 0.0;
  for (size_t r = 0; r < res.rounds.size(); ++r) {
    const auto& rec = res.rounds[r];
    if (r == 0) {
      env = rec.z_fine_before;
      csv << 0 << ',' << num(rec.z_fine_before) << ',' << num(env) << '\n';
    }
    env = consts.a * env + rec.epsilon;
    csv << r + 1 << ',' << num(rec.z_fine_after) << ',' << num(env) << '\n';
    write_text(s.out + "/blended_" + std::to_string(r + 1) + ".json", dump(rec.blended));
  }
  write_text(s.out + "/decay.csv", csv.str());
  std::cout << csv.str();
  // Partial rounds stay on disk; the failure still surfaces as the exit status.
  if (res.halted) fail(res.halt_reason, res.halt_message);
  return 0;
}

int cmd_verify(const Options& o) {
  const std::string out = o.out.value_or("out");
  std::filesystem::create_directories(out);
  const auto report = run_verify(static_cast<std::uint64_t>(o.seed.value_or(0)));
  write_text(out + "/verify.json", dump(report));
  for (const auto& s : report["suites"])
    std::cout << (s["pass"].get<bool>() ? "PASS " : "FAIL ") << s["name"].get<std::string>() << '\n';
  return report["pass"].get<bool>() ? 0 : 1;
}

}  // namespace conflab::cli
