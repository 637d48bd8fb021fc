#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "capmod/condenser.hpp"
#include "capmod/fields.hpp"
#include "capmod/graph.hpp"

namespace capmod {

struct CapacityOptions {
  double p = 2.0;
  /// Stop when the projected gradient, measured as sqrt(sum g_i^2 / sigma_i),
  /// falls below tol.
  double tol = 1e-3;
  int max_iter = 20000;
  int memory = 8;
  double armijo = 1e-4;
  int max_backtracks = 40;
  bool keep_trace = false;
};

struct CapacityReport {
  double value = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  int accepted_steps = 0;
  int backtracks = 0;
  int evaluations = 0;
  bool converged = false;
  bool max_iter_reached = false;
  bool stalled = false;
  std::vector<double> energy_trace;
};

struct CapacityResult {
  PotentialField potential;
  CapacityReport report;
};

/// Central difference of u along each frame flow, u(x exp(+-h X_j)), with
/// plate neighbours taken on the cell face as in CapacityProblem. Falls back
/// to a one-sided difference when one side leaves D and sets *one_sided; throws std::invalid_argument on exterior nodes.
Covector horizontal_gradient(const Grid& g, const GroupSpec& spec,
                             const PotentialField& u, std::int64_t node,
                             bool* one_sided = nullptr);

/// Discrete energy sum_x sigma(x) 2^-n1 sum_s H(x, D^s u)^p over interior
/// nodes, where D^s takes the forward (s_j = +) or backward (s_j = -)
/// difference along X_j. Differences that leave D are 0. A step that lands
/// on a plate node is measured against the plate value on the cell face,
/// h/2 away. Unknowns are the values at interior nodes.
class CapacityProblem {
 public:
  CapacityProblem(std::shared_ptr<const Grid> grid, double p);

  std::size_t unknowns() const { return var_cell_.size(); }
  const Grid& grid() const { return *grid_; }
  double sigma(std::size_t var) const { return grid_->measure(var_cell_[var]); }

  std::vector<double> pack(const PotentialField& u) const;
  PotentialField unpack(const std::vector<double>& x) const;

  double energy(const std::vector<double>& x, std::vector<double>* grad) const;
  double energy(const PotentialField& u) const;

 private:
  struct Target {
    std::int64_t begin = 0;  // into entry_cell_; count 0 means no neighbour
    std::int32_t count = 0;
    double face = -1.0;      // plate value at the face h/2 away, if >= 0
  };

  std::shared_ptr<const Grid> grid_;
  double p_;
  int n1_;
  std::vector<std::int64_t> nodes_;     // cells that can carry energy
  std::vector<Target> targets_;         // per node, axis, side
  std::vector<std::int64_t> entry_cell_;
  std::vector<double> entry_weight_;
  std::vector<std::int32_t> var_of_cell_;
  std::vector<std::int64_t> var_cell_;
  std::vector<LocalNorm> norms_;        // one entry when left-invariant
};

/// Projected L-BFGS on the discrete energy with backtracking and clamping to
/// [0, 1]. Without an initial potential the solver starts from the
/// normalized graph distance to E0 under a constant density.
CapacityResult solve_capacity(const HorizontalGraph& graph,
                              const CapacityOptions& opt = {},
                              const PotentialField* initial = nullptr);
CapacityResult solve_capacity(const Condenser& c, double h,
                              const CapacityOptions& opt = {},
                              int graph_radius = 1);

/// rho(x) = H(x, horizontal_gradient(u, x)) on every cell of D.
DensityField density_from_potential(const PotentialField& u);

/// u(x) = min(1, rho-distance from E0), on E1 as well, so u < 1 there exposes
/// an inadmissible rho. Unreachable nodes get 1 and are counted in
/// *unreachable.
PotentialField potential_from_density(const HorizontalGraph& graph,
                                      const DensityField& rho,
                                      std::int64_t* unreachable = nullptr);

}  // namespace capmod
