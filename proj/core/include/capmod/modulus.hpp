#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "capmod/condenser.hpp"
#include "capmod/curve.hpp"
#include "capmod/fields.hpp"
#include "capmod/graph.hpp"

namespace capmod {

struct ModulusOptions {
  double p = 2.0;
  double tol = 1e-3;
  int max_iter = 200;
  /// New constraints accepted per separation round.
  int max_new_constraints = 512;
  /// Dual coordinate-ascent sweeps per round.
  int max_sweeps = 60;
  double sweep_tol = 1e-9;
  bool keep_family = true;
};

struct ModulusTraceRow {
  int iteration = 0;
  double objective = 0.0;    // restricted primal energy
  double lower_bound = 0.0;  // dual objective
  double upper_bound = 0.0;
  double min_rho_length = 0.0;
  std::size_t family_size = 0;
};

struct ModulusReport {
  double value = 0.0;  // best certified upper bound
  double upper_bound = 0.0;
  double lower_bound = 0.0;
  double min_rho_length = 0.0;
  /// 1 - min_rho_length of the final restricted density.
  double residual = 0.0;
  int iterations = 0;
  bool max_iter_reached = false;
  bool empty_family = false;
  bool ill_conditioned = false;
  std::vector<CurvePath> active_family;
  std::vector<ModulusTraceRow> trace;
  /// Density achieving the upper bound, rescaled to be admissible.
  DensityField density;
};

struct ViolatedCurve {
  bool found = false;
  GraphPath graph_path;
  CurvePath path;
  double rho_length = 0.0;
};

/// Minimum rho-length path from E0 to E1.
ViolatedCurve shortest_violated_curve(const HorizontalGraph& graph,
                                      const MetricSpec& m,
                                      const DensityField& rho);

ModulusReport solve_modulus(const HorizontalGraph& graph,
                            const ModulusOptions& opt = {});
ModulusReport solve_modulus(const Condenser& c, double h,
                            const ModulusOptions& opt = {},
                            int graph_radius = 1);

/// Radial profile phi(r) on [0, 1); zero from r = 1 on.
using BumpProfile = std::function<double(double)>;
double standard_bump(double r);
/// Integral of phi(|x|) over the group in normalized Haar measure,
/// Q * int_0^1 r^(Q-1) phi(r) dr.
double bump_normalization(int homogeneous_dim, const BumpProfile& phi);
/// Quadrature of phi_t(x y^{-1}) over all lattice nodes y.
double kernel_mass(const Grid& grid, const Point& x, double t,
                   const BumpProfile& phi = standard_bump);
/// Group convolution rho * phi_t on the lattice, with the kernel weights at
/// each node divided by their lattice sum so constants are reproduced away
/// from the grid edge. Plate and exterior cells of the result are 0. Throws ConfigError when t < 2h.
DensityField mollify_density(const DensityField& rho, double t,
                             const BumpProfile& phi = standard_bump);
/// (sum sigma |a - b|^p)^(1/p).
double lp_distance(const DensityField& a, const DensityField& b, double p);

struct ContinuityLevel {
  int j = 0;
  double value = 0.0;
  double lower_bound = 0.0;
};

/// Modulus along a sequence of plate pairs that shrink onto the limit pair.
/// Throws ConfigError when a level is not contained in the previous one on
/// the grid of the base condenser.
std::vector<ContinuityLevel> modulus_continuity_experiment(
    const Condenser& base, double h,
    const std::vector<std::pair<Region, Region>>& plates,
    const ModulusOptions& opt = {}, int graph_radius = 1);

}  // namespace capmod
