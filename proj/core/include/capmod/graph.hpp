#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "capmod/condenser.hpp"
#include "capmod/curve.hpp"

namespace capmod {

/// Affine map of lattice coordinates induced by a right translation:
/// s' = s + offset, then s'_2 += coupling * s_1.
struct LatticeShift {
  FlatVector offset;
  Eigen::MatrixXd coupling;  // n2 x n1

  FlatVector apply(const FlatVector& s, int n1) const;
};

/// Lattice map of y -> y exp(w) for a horizontal displacement w.
LatticeShift right_translation_shift(const Grid& g, const LayerVector& w);

/// One horizontal move exp(h v), v a primitive integer vector. The move is
/// cut into `substeps` equal pieces so every piece spans at most one cell.
struct GraphMove {
  std::vector<int> v;
  HorizontalVector control;
  int substeps = 1;
  int reverse = -1;  // index of the move -v
  LatticeShift target;
  std::vector<LatticeShift> midpoints;
  std::vector<LatticeShift> joints;  // interior substep endpoints
};

struct ConnectivityReport {
  bool plates_connected = false;
  std::int64_t plate1_reachable = 0;
  std::int64_t dead_ends = 0;  // non-exterior nodes without valid edges
  std::int64_t components = 0;
  bool symmetric = true;
  std::int64_t edges = 0;
};

struct GraphPath {
  std::vector<std::int64_t> nodes;
  std::vector<int> moves;  // moves[k] leads from nodes[k] to nodes[k+1]
};

/// Directed graph of horizontal moves between grid nodes. An edge exists
/// when its target and every substep point stay in D.
class HorizontalGraph {
 public:
  const Grid& grid() const { return *grid_; }
  const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }
  int radius() const { return radius_; }
  int move_count() const { return static_cast<int>(moves_.size()); }
  const GraphMove& move(int m) const {
    return moves_[static_cast<std::size_t>(m)];
  }
  const ConnectivityReport& connectivity() const { return report_; }

  /// Target node of the edge, or -1 when the edge is not in the graph.
  std::int64_t target(std::int64_t node, int m) const {
    return targets_[static_cast<std::size_t>(node * move_count() + m)];
  }
  /// F(mid, v) h / substeps for substep k.
  double substep_length(std::int64_t node, int m, int k) const;
  /// Finsler length of the edge.
  double base_length(std::int64_t node, int m) const;
  /// Sum over substeps of substep_length * rho(mid).
  double rho_cost(std::int64_t node, int m, std::span<const double> rho) const;
  /// Calls f(cell, coefficient) for the linear form rho -> rho_cost.
  template <typename F>
  void for_each_coefficient(std::int64_t node, int m, F&& f) const;

  CurvePath to_curve(const GraphPath& path) const;

 private:
  friend std::shared_ptr<const HorizontalGraph> build_horizontal_graph(
      std::shared_ptr<const Grid> grid, int radius);

  std::shared_ptr<const Grid> grid_;
  int radius_ = 1;
  int n1_ = 0;
  std::vector<GraphMove> moves_;
  std::vector<std::int32_t> targets_;
  std::vector<double> move_lengths_;  // left-invariant: per move and substep
  std::vector<double> node_lengths_;  // otherwise: per node, move, substep
  std::vector<int> length_offset_;    // substep offset of each move
  int total_substeps_ = 0;
  ConnectivityReport report_;
};

/// Moves are the primitive v with max |v_i| <= radius; radius 1 gives the
/// grid-adjacent stencil.
std::shared_ptr<const HorizontalGraph> build_horizontal_graph(
    std::shared_ptr<const Grid> grid, int radius = 1);

struct SearchResult {
  std::vector<double> dist;
  std::vector<double> length;  // geometric length, used to break ties
  std::vector<std::int32_t> parent;
  std::vector<std::int16_t> parent_move;
};

/// Multi-source Dijkstra from the E0 nodes. Edge weight is rho_cost, or the
/// Finsler length when rho is empty. E1 nodes are settled but not expanded
/// unless expand_plate1 is set.
SearchResult shortest_paths(const HorizontalGraph& g,
                            std::span<const double> rho, bool expand_plate1);
SearchResult shortest_paths_from(const HorizontalGraph& g,
                                 std::span<const std::int64_t> sources,
                                 std::span<const double> rho,
                                 bool expand_plate1);
GraphPath trace_path(const SearchResult& r, std::int64_t target);

template <typename F>
void HorizontalGraph::for_each_coefficient(std::int64_t node, int m,
                                           F&& f) const {
  const GraphMove& mv = move(m);
  const FlatVector s = grid_->lattice_coords(node);
  Stencil st;
  for (int k = 0; k < mv.substeps; ++k) {
    grid_->stencil(mv.midpoints[static_cast<std::size_t>(k)].apply(s, n1_), &st);
    const double len = substep_length(node, m, k);
    for (int c = 0; c < st.count; ++c) {
      const auto sc = static_cast<std::size_t>(c);
      f(st.index[sc], len * st.weight[sc]);
    }
  }
}

}  // namespace capmod
