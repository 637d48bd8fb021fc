#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "capmod_cli/config.hpp"
#include "capmod_cli/report.hpp"

namespace capmod::cli {

struct ComparisonRow {
  double h = 0.0;
  double modulus = 0.0;
  double modulus_lower = 0.0;
  double capacity = 0.0;
  double gap = 0.0;  // |M - C| / M
  int modulus_iterations = 0;
  int capacity_iterations = 0;
  bool modulus_converged = false;
  bool capacity_converged = false;
  bool empty_family = false;
  /// Energy of potential_from_density applied to the modulus density, and
  /// the energy of that density.
  double bridge_potential_energy = 0.0;
  double bridge_density_energy = 0.0;
  /// Minimum rho-length over graph paths of density_from_potential(u).
  double fenchel_min_length = 0.0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  bool gap_monotone = true;
  bool within_tolerance = true;
};

/// Both solvers on the same grid and graph.
ComparisonRow compare_at(const Condenser& c, double h, const SolverSettings& s);
/// One row per spacing of cfg.solver.h_list, in the given order.
ComparisonReport run_refinement(const ExperimentConfig& cfg);

struct InvariantCheck {
  std::string name;
  bool pass = false;
  double worst = 0.0;
  double tolerance = 0.0;
};

/// Group law, gauge, measure and metric property suite.
std::vector<InvariantCheck> verify_group(const GroupSpec& g, const MetricSpec& m,
                                         int samples, std::uint64_t seed);

struct MollifyRow {
  double t = 0.0;
  double kernel_mass = 0.0;
  double lp_error = 0.0;
  /// Minimum (1 + eps) rho_t-length over the sampled paths and over all
  /// plate-joining graph paths.
  double min_sampled_length = 0.0;
  double min_graph_length = 0.0;
};

/// `rho` may be nonzero on the plates; the Lp error is taken against its
/// restriction to interior cells. Kernel mass is evaluated at `probe`.
std::vector<MollifyRow> mollify_study(const HorizontalGraph& graph,
                                      const DensityField& rho,
                                      const std::vector<double>& t_list,
                                      double p, double epsilon, int samples,
                                      std::uint64_t seed, const Point& probe);

struct ContinuityStudy {
  double limit = 0.0;
  std::vector<ContinuityLevel> levels;
  bool monotone = true;
  double final_deviation = 0.0;
};

ContinuityStudy run_continuity_study(const ExperimentConfig& cfg);

struct CommandOutcome {
  Report report;
  int exit_code = 0;
};

/// Dispatches on cfg.command. `trace_path` and `potential_path` request
/// optional CSV side outputs.
CommandOutcome run_command(const ExperimentConfig& cfg,
                           const std::string& trace_path = "",
                           const std::string& potential_path = "");

}  // namespace capmod::cli
