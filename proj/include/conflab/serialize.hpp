#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "conflab/analysis.hpp"
#include "conflab/cocycle.hpp"
#include "conflab/perturb.hpp"

namespace conflab {

using json = nlohmann::json;

struct RunConfig {
  int dimension = 2;
  json base;
  json generator;
  int n = 2000;
  int grid_size = kDefaultGrid;
  int detection_horizon = 500;
  double epsilon = 0.5;
  long seed = 0;
  std::string output = "out";
};

RunConfig parse_config(const json& j);
RunConfig load_config(const std::string& path);
json config_to_json(const RunConfig& c);
Cocycle build_cocycle(const RunConfig& c);

// Throws a config error if j has keys outside `allowed`.
void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where);

json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j, int dim);

json to_json(const SingularData& s);
json to_json(const DominationReport& r);
json to_json(const SplittingFrame& f);
json to_json(const PerturbationPlan& p);

// Rebuilds a plan and re-asserts the budget against the cocycle.
PerturbationPlan plan_from_json(const json& j, const Cocycle& a);

// Writes text with a trailing newline, creating parent directories.
void write_text(const std::string& path, const std::string& text);
std::string dump(const json& j);

}  // namespace conflab
