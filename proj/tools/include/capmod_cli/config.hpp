#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "capmod/capacity.hpp"
#include "capmod/condenser.hpp"
#include "capmod/modulus.hpp"

namespace capmod::cli {

/// Names usable in expressions that depend on a point: x1..xn1, z1..zn2, and
/// the aliases x, y (first two horizontal coordinates) and z (first vertical
/// coordinate, or x3 on abelian groups).
std::vector<std::string> point_variables(const GroupSpec& g);
/// Values in the order of point_variables().
std::vector<double> point_values(const GroupSpec& g, const Point& p);

/// Parses the region language, e.g.
///   box([0, 0], [1, 1]) | ball(0.5; 2, 0) & !halfspace([1, 0], 0.25)
/// Operators by increasing precedence: | (union), - (difference),
/// & (intersection), ! (complement). Primitives: ball(r), ball(r; c...),
/// shell(r_in, r_out), shell(r_in, r_out; c...), box([lo...], [hi...]),
/// halfspace([a...], b), all, empty, scale(lambda, region). Numbers are
/// constant expressions that may use the names in `bindings`.
Region parse_region(std::string_view text,
                    const std::map<std::string, double>& bindings = {});

struct SolverSettings {
  double p = 2.0;
  std::vector<double> h_list{1.0 / 32.0};
  int graph_radius = 1;
  ModulusOptions modulus;
  CapacityOptions capacity;
};

struct ContinuitySettings {
  int levels = 8;
  std::string plate0;  // region text with the level index j
  std::string plate1;
  double tol = 0.05;
};

struct MollifySettings {
  std::vector<double> t_list;
  double epsilon = 0.1;
  int samples = 100;
  std::string density;  // point expression; empty uses the modulus solution
};

/// Parsed condenser config. Only the text is kept for regions that depend
/// on experiment parameters; everything else is built eagerly.
struct ExperimentConfig {
  std::string path;
  std::string command;
  GroupSpec group = GroupSpec::abelian(2);
  MetricSpec metric = MetricSpec::euclidean(2);
  std::string domain_text;
  std::string plate0_text;
  std::string plate1_text;
  std::string weight_text;
  SolverSettings solver;
  double gap_tol = 0.05;
  ContinuitySettings continuity;
  MollifySettings mollify;
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "text";

  Condenser condenser() const;
};

/// Reads an INI-style file with sections [group], [metric], [condenser],
/// [solver], [compare], [continuity], [mollify]. Throws ConfigError.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(std::string_view text,
                              const std::string& origin = "<string>");

/// "1/16, 1/32" -> {0.0625, 0.03125}.
std::vector<double> parse_number_list(std::string_view text);

}  // namespace capmod::cli
