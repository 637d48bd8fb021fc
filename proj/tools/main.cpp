#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "capmod/error.hpp"
#include "capmod_cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace capmod;
  CLI::App app{"p-modulus and p-capacity of condensers on step-2 Carnot groups"};
  app.set_help_flag("--help", "print this help and exit");
  std::string config, command, h_list, out, format = "text", trace, potential;
  double p = 0.0, h = 0.0, tol = 0.0;
  std::int64_t seed = -1;
  app.add_option("--config", config, "condenser config file")->required();
  app.add_option("--command", command, "modulus, capacity, compare, verify-group, mollify-demo, continuity")
      ->required()
      ->check(CLI::IsMember({"modulus", "capacity", "compare", "verify-group", "mollify-demo",
                             "continuity"}));
  app.add_option("--p", p, "exponent, overrides [solver] p");
  auto* h_opt = app.add_option("--h", h, "grid spacing");
  app.add_option("--h-list", h_list, "comma-separated spacings")->excludes(h_opt);
  app.add_option("--tol", tol, "modulus tolerance, overrides [solver] tol");
  app.add_option("--seed", seed, "seed for sampled checks");
  app.add_option("--out", out, "write the report here instead of stdout");
  app.add_option("--format", format, "text, csv or json")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  app.add_option("--trace", trace, "per-iteration CSV of the last solve");
  app.add_option("--potential", potential, "CSV of the capacity potential");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    cli::ExperimentConfig cfg = cli::load_config(config);
    cfg.command = command;
    cfg.format = format;
    cfg.out = out;
    if (p != 0.0) cfg.solver.p = p;
    if (!(cfg.solver.p > 1.0)) throw ConfigError("p must exceed 1");
    if (h != 0.0) cfg.solver.h_list = {h};
    if (!h_list.empty()) cfg.solver.h_list = cli::parse_number_list(h_list);
    for (double v : cfg.solver.h_list) {
      if (!(v > 0.0)) throw ConfigError("grid spacing must be positive");
    }
    if (tol != 0.0) cfg.solver.modulus.tol = tol;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);

    std::ofstream file;
    if (!out.empty()) {
      file.open(out);
      if (!file) throw ConfigError("cannot write '" + out + "'");
    }
    const cli::CommandOutcome res = cli::run_command(cfg, trace, potential);
    cli::write_report(out.empty() ? std::cout : file, res.report, format);
    return res.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  }
}
