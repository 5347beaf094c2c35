#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "conflab/errors.hpp"
#include "conflab/serialize.hpp"

using namespace conflab;

int main(int argc, char** argv) {
  CLI::App app{"Distortion functionals and perturbations of linear cocycles"};
  app.require_subcommand(1);
  cli::Options o;
  double anchor = 0.0;
  int n = 0;
  long seed = 0;
  std::string out;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* cfg = sub->add_option("--config", o.config_path, "run configuration (JSON)");
    if (needs_config) cfg->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "seed for randomized suites");
    sub->add_option("--n", n, "segment length / horizon")->check(CLI::PositiveNumber);
  };
  auto* analyze = app.add_subcommand("analyze", "estimate K, Z, spectra, domination");
  add_common(analyze, true);
  auto* perturb = app.add_subcommand("perturb", "perturb one orbit segment");
  add_common(perturb, true);
  perturb->add_option("--anchor", anchor, "anchor point on the circle");
  auto* conformalize = app.add_subcommand("conformalize", "global castle perturbation, iterated");
  add_common(conformalize, true);
  conformalize->add_option("--rounds", o.rounds, "number of rounds")->check(CLI::PositiveNumber);
  auto* verify = app.add_subcommand("verify", "run the invariant suites");
  add_common(verify, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(Reason::argument);
  }
  auto* active = app.get_subcommands().front();
  const auto given = [&](const char* name) {
    const auto* opt = active->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--anchor")) o.anchor = anchor;
  if (given("--n")) o.n = n;
  if (given("--seed")) o.seed = seed;
  if (given("--out")) o.out = out;

  try {
    if (analyze->parsed()) return cli::cmd_analyze(o);
    if (perturb->parsed()) return cli::cmd_perturb(o);
    if (conformalize->parsed()) return cli::cmd_conformalize(o);
    return cli::cmd_verify(o);
  } catch (const Error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << '\n';
    const std::string dir = o.out.value_or("out");
    try {
      std::filesystem::create_directories(dir);
      nlohmann::json err = {{"reason", std::string(e.code())}, {"message", e.what()}};
      write_text(dir + "/error.json", dump(err));
    } catch (...) {
    }
    return exit_code(e.reason());
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return exit_code(Reason::internal);
  }
}
