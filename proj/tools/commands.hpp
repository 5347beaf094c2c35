#pragma once

#include <optional>
#include <string>

#include "conflab/serialize.hpp"

namespace conflab::cli {

struct Options {
  std::string config_path;
  std::optional<double> anchor;
  std::optional<int> n;
  int rounds = 1;
  std::optional<std::string> out;
  std::optional<long> seed;
};

int cmd_analyze(const Options& o);
int cmd_perturb(const Options& o);
int cmd_conformalize(const Options& o);
int cmd_verify(const Options& o);

}  // namespace conflab::cli
