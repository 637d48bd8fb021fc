#pragma once

#include <vector>

#include "capmod/group.hpp"
#include "capmod/metric.hpp"

namespace capmod {

struct DensityField;
class HorizontalGraph;

struct ControlSegment {
  HorizontalVector control;
  double dt = 0.0;
};

/// Piecewise-constant-control horizontal curve. nodes has one more entry
/// than controls and dt.
struct CurvePath {
  std::vector<Point> nodes;
  std::vector<HorizontalVector> controls;
  std::vector<double> dt;

  std::size_t segments() const { return controls.size(); }
  const Point& front() const { return nodes.front(); }
  const Point& back() const { return nodes.back(); }
};

/// One classical RK4 step of x' = frame(x) u per segment.
CurvePath integrate_horizontal(const GroupSpec& spec, const Point& x0,
                               const std::vector<ControlSegment>& controls);

/// Point reached from x after time t of control u (midpoint of a segment).
Point flow(const GroupSpec& spec, const Point& x, const HorizontalVector& u,
           double t);

/// Sum of F(mid_k, u_k) dt_k. With constant control a step-2 flow is affine
/// in time, so mid_k is the average of the segment endpoints.
double finsler_length(const MetricSpec& m, const CurvePath& path);
/// Sum of rho(mid_k) F(mid_k, u_k) dt_k with multilinear rho. Throws
/// std::out_of_range when a midpoint leaves the grid.
double rho_length(const MetricSpec& m, const DensityField& rho,
                  const CurvePath& path);

/// Graph distance between the nodes nearest to x and y.
double cc_distance(const GroupSpec& spec, const MetricSpec& m,
                   const HorizontalGraph& graph, const Point& x, const Point& y);

}  // namespace capmod
