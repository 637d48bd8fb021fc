#include "capmod_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "capmod/capacity.hpp"
#include "capmod/error.hpp"
#include "capmod/expression.hpp"

namespace capmod::cli {
namespace {

Point random_point(const GroupSpec& g, std::mt19937_64& rng, double range) {
  std::uniform_real_distribution<double> u(-range, range);
  FlatVector f(g.dim());
  for (int i = 0; i < g.dim(); ++i) f[i] = u(rng);
  return g.from_flat(f);
}

double rel(const Point& a, const Point& b) {
  return (a.flat() - b.flat()).norm() / (1.0 + b.flat().norm());
}

ModulusOptions modulus_options(const SolverSettings& s) {
  ModulusOptions o = s.modulus;
  o.p = s.p;
  o.keep_family = false;
  return o;
}

CapacityOptions capacity_options(const SolverSettings& s) {
  CapacityOptions o = s.capacity;
  o.p = s.p;
  return o;
}

double min_rho_length(const HorizontalGraph& graph, const DensityField& rho) {
  return shortest_violated_curve(graph, graph.grid().metric(), rho).rho_length;
}

void open_or_throw(std::ofstream& f, const std::string& path) {
  f.open(path);
  if (!f) throw ConfigError("cannot write '" + path + "'");
}

void write_modulus_trace(const std::string& path, const ModulusReport& r) {
  std::ofstream f;
  open_or_throw(f, path);
  f << "iteration,objective,lower_bound,upper_bound,min_rho_length,family_size\n";
  for (const auto& row : r.trace) {
    f << row.iteration << ',' << format_number(row.objective) << ','
      << format_number(row.lower_bound) << ',' << format_number(row.upper_bound) << ','
      << format_number(row.min_rho_length) << ',' << row.family_size << '\n';
  }
}

void write_potential(const std::string& path, const PotentialField& u) {
  std::ofstream f;
  open_or_throw(f, path);
  const Grid& g = *u.grid;
  for (int a = 0; a < g.dim(); ++a) f << 'c' << a + 1 << ',';
  f << "label,u\n";
  static const char* names[] = {"exterior", "interior", "plate0", "plate1"};
  for (std::int64_t i = 0; i < g.size(); ++i) {
    if (g.label(i) == CellLabel::kExterior) continue;
    const FlatVector x = g.center(i).flat();
    for (int a = 0; a < g.dim(); ++a) f << format_number(x[a]) << ',';
    f << names[static_cast<int>(g.label(i))] << ','
      << format_number(u.values[static_cast<std::size_t>(i)]) << '\n';
  }
}

CommandOutcome command_modulus(const ExperimentConfig& cfg, const std::string& trace) {
  CommandOutcome out;
  Report& r = out.report;
  r.command = "modulus";
  r.summary["config"] = cfg.path;
  r.summary["p"] = cfg.solver.p;
  r.summary["ball_volume"] = cfg.group.ball_volume();
  r.summary["graph_radius"] = cfg.solver.graph_radius;
  r.columns = {"h", "modulus", "lower_bound", "min_rho_length", "iterations",
               "max_iter_reached", "empty_family"};
  const Condenser c = cfg.condenser();
  ModulusReport last;
  for (double h : cfg.solver.h_list) {
    const auto graph = build_horizontal_graph(build_grid(c, h), cfg.solver.graph_radius);
    last = solve_modulus(*graph, modulus_options(cfg.solver));
    r.add_row({h, last.value, last.lower_bound, last.min_rho_length, last.iterations,
               last.max_iter_reached, last.empty_family});
    if (last.max_iter_reached) {
      r.warnings.push_back("h=" + format_number(h) + ": iteration limit reached");
      out.exit_code = 1;
    }
    if (last.ill_conditioned) r.warnings.push_back("p close to 1; convergence is slow");
  }
  if (!trace.empty()) write_modulus_trace(trace, last);
  return out;
}

CommandOutcome command_capacity(const ExperimentConfig& cfg, const std::string& trace,
                                const std::string& potential) {
  CommandOutcome out;
  Report& r = out.report;
  r.command = "capacity";
  r.summary["config"] = cfg.path;
  r.summary["p"] = cfg.solver.p;
  r.summary["ball_volume"] = cfg.group.ball_volume();
  r.columns = {"h", "capacity", "iterations", "gradient_norm", "converged", "stalled",
               "backtracks"};
  const Condenser c = cfg.condenser();
  SolverSettings s = cfg.solver;
  s.capacity.keep_trace = !trace.empty();
  CapacityResult last;
  for (double h : cfg.solver.h_list) {
    const auto graph = build_horizontal_graph(build_grid(c, h), cfg.solver.graph_radius);
    last = solve_capacity(*graph, capacity_options(s));
    const CapacityReport& cr = last.report;
    r.add_row({h, cr.value, cr.iterations, cr.gradient_norm, cr.converged, cr.stalled,
               cr.backtracks});
    if (!cr.converged) {
      r.warnings.push_back("h=" + format_number(h) + ": gradient tolerance not reached");
      out.exit_code = 1;
    }
  }
  if (!trace.empty()) {
    std::ofstream f;
    open_or_throw(f, trace);
    f << "iteration,energy\n";
    for (std::size_t k = 0; k < last.report.energy_trace.size(); ++k) {
      f << k << ',' << format_number(last.report.energy_trace[k]) << '\n';
    }
  }
  if (!potential.empty()) write_potential(potential, last.potential);
  return out;
}

CommandOutcome command_compare(const ExperimentConfig& cfg) {
  CommandOutcome out;
  Report& r = out.report;
  r.command = "compare";
  const ComparisonReport cr = run_refinement(cfg);
  r.summary["config"] = cfg.path;
  r.summary["p"] = cfg.solver.p;
  r.summary["ball_volume"] = cfg.group.ball_volume();
  r.summary["gap_tol"] = cfg.gap_tol;
  r.summary["final_gap"] = cr.rows.back().gap;
  r.summary["gap_monotone"] = cr.gap_monotone;
  r.summary["within_tolerance"] = cr.within_tolerance;
  r.columns = {"h", "modulus", "modulus_lower", "capacity", "gap", "bridge_energy",
               "density_energy", "fenchel_min_length"};
  for (const auto& row : cr.rows) {
    r.add_row({row.h, row.modulus, row.modulus_lower, row.capacity, row.gap,
               row.bridge_potential_energy, row.bridge_density_energy,
               row.fenchel_min_length});
    if (!row.modulus_converged) {
      r.warnings.push_back("h=" + format_number(row.h) + ": modulus hit the iteration limit");
    }
    if (!row.capacity_converged) {
      r.warnings.push_back("h=" + format_number(row.h) + ": capacity hit the iteration limit");
    }
    if (row.empty_family) {
      r.warnings.push_back("h=" + format_number(row.h) + ": plates are not connected");
    }
  }
  if (!cr.gap_monotone) r.warnings.push_back("gap does not shrink monotonically under refinement");
  out.exit_code = cr.within_tolerance ? 0 : 1;
  return out;
}

CommandOutcome command_verify_group(const ExperimentConfig& cfg) {
  CommandOutcome out;
  Report& r = out.report;
  r.command = "verify-group";
  r.summary["group"] = cfg.group.describe();
  r.summary["metric"] = cfg.metric.describe();
  r.summary["seed"] = cfg.seed;
  r.columns = {"invariant", "status", "worst", "tolerance"};
  bool ok = true;
  for (const auto& chk : verify_group(cfg.group, cfg.metric, 10000, cfg.seed)) {
    r.add_row({chk.name, chk.pass ? "pass" : "FAIL", chk.worst, chk.tolerance});
    ok = ok && chk.pass;
  }
  out.exit_code = ok ? 0 : 1;
  return out;
}

CommandOutcome command_mollify(const ExperimentConfig& cfg) {
  CommandOutcome out;
  Report& r = out.report;
  r.command = "mollify-demo";
  const double h = cfg.solver.h_list.front();
  const Condenser c = cfg.condenser();
  const auto graph = build_horizontal_graph(build_grid(c, h), cfg.solver.graph_radius);
  const Grid& g = graph->grid();
  DensityField rho;
  if (cfg.mollify.density.empty()) {
    rho = solve_modulus(*graph, modulus_options(cfg.solver)).density;
    r.summary["density"] = "modulus solution";
  } else {
    const Expression e = Expression::parse(cfg.mollify.density, point_variables(g.group()));
    rho = DensityField{graph->grid_ptr(), std::vector<double>(static_cast<std::size_t>(g.size()), 0.0)};
    for (std::int64_t i = 0; i < g.size(); ++i) {
      if (g.label(i) == CellLabel::kExterior) continue;
      rho.values[static_cast<std::size_t>(i)] = e.evaluate(point_values(g.group(), g.center(i)));
    }
    rho.check();
    r.summary["density"] = cfg.mollify.density;
  }
  std::vector<double> ts = cfg.mollify.t_list;
  if (ts.empty()) {
    for (int k = 2; k <= 5; ++k) ts.push_back(std::ldexp(1.0, -k));
  }
  r.summary["h"] = h;
  r.summary["epsilon"] = cfg.mollify.epsilon;
  r.summary["samples"] = cfg.mollify.samples;
  r.columns = {"t", "kernel_mass", "lp_error", "min_sampled_length", "min_graph_length"};
  const auto rows = mollify_study(*graph, rho, ts, cfg.solver.p, cfg.mollify.epsilon,
                                  cfg.mollify.samples, cfg.seed, g.group().identity());
  bool decreasing = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    r.add_row({rows[k].t, rows[k].kernel_mass, rows[k].lp_error, rows[k].min_sampled_length,
               rows[k].min_graph_length});
    if (k > 0 && !(rows[k].lp_error < rows[k - 1].lp_error)) decreasing = false;
  }
  r.summary["lp_error_decreasing"] = decreasing;
  if (!decreasing) {
    r.warnings.push_back("Lp error is not strictly decreasing in t");
    out.exit_code = 1;
  }
  return out;
}

CommandOutcome command_continuity(const ExperimentConfig& cfg) {
  CommandOutcome out;
  Report& r = out.report;
  r.command = "continuity";
  const ContinuityStudy st = run_continuity_study(cfg);
  r.summary["config"] = cfg.path;
  r.summary["h"] = cfg.solver.h_list.front();
  r.summary["limit"] = st.limit;
  r.summary["final_deviation"] = st.final_deviation;
  r.summary["monotone"] = st.monotone;
  r.columns = {"j", "modulus", "lower_bound", "deviation"};
  for (const auto& lv : st.levels) {
    r.add_row({lv.j, lv.value, lv.lower_bound, std::abs(lv.value - st.limit) / st.limit});
  }
  if (!st.monotone) r.warnings.push_back("values are not monotone within solver tolerance");
  const bool ok = st.monotone && st.final_deviation <= cfg.continuity.tol;
  out.exit_code = ok ? 0 : 1;
  return out;
}

}  // namespace

ComparisonRow compare_at(const Condenser& c, double h, const SolverSettings& s) {
  const auto graph = build_horizontal_graph(build_grid(c, h), s.graph_radius);
  ComparisonRow row;
  row.h = h;
  const ModulusReport mr = solve_modulus(*graph, modulus_options(s));
  const CapacityResult cr = solve_capacity(*graph, capacity_options(s));
  row.modulus = mr.value;
  row.modulus_lower = mr.lower_bound;
  row.capacity = cr.report.value;
  row.modulus_iterations = mr.iterations;
  row.capacity_iterations = cr.report.iterations;
  row.modulus_converged = !mr.max_iter_reached;
  row.capacity_converged = cr.report.converged;
  row.empty_family = mr.empty_family;
  if (row.modulus > 0.0) {
    row.gap = std::abs(row.modulus - row.capacity) / row.modulus;
  } else {
    row.gap = row.capacity > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  if (!mr.empty_family) {
    const CapacityProblem prob(graph->grid_ptr(), s.p);
    row.bridge_potential_energy = prob.energy(potential_from_density(*graph, mr.density));
    row.bridge_density_energy = mr.density.energy(s.p);
    row.fenchel_min_length = min_rho_length(*graph, density_from_potential(cr.potential));
  }
  return row;
}

ComparisonReport run_refinement(const ExperimentConfig& cfg) {
  if (cfg.solver.h_list.empty()) throw ConfigError("no grid spacing given");
  ComparisonReport rep;
  const Condenser c = cfg.condenser();
  for (double h : cfg.solver.h_list) rep.rows.push_back(compare_at(c, h, cfg.solver));
  for (std::size_t k = 1; k < rep.rows.size(); ++k) {
    if (rep.rows[k].gap > rep.rows[k - 1].gap) rep.gap_monotone = false;
  }
  rep.within_tolerance = rep.rows.back().gap <= cfg.gap_tol;
  return rep;
}

std::vector<InvariantCheck> verify_group(const GroupSpec& g, const MetricSpec& m,
                                         int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lam(0.1, 10.0);
  std::vector<InvariantCheck> out;
  auto add = [&](std::string name, double worst, double tol) {
    out.push_back({std::move(name), worst <= tol, worst, tol});
  };

  double assoc = 0.0, inv = 0.0, sym = 0.0, hom = 0.0, homog = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Point x = random_point(g, rng, 2.0);
    const Point y = random_point(g, rng, 2.0);
    const Point z = random_point(g, rng, 2.0);
    assoc = std::max(assoc, rel(multiply(g, multiply(g, x, y), z),
                                multiply(g, x, multiply(g, y, z))));
    inv = std::max(inv, rel(multiply(g, inverse(g, x), x), g.identity()));
    const double nx = homogeneous_norm(g, x);
    sym = std::max(sym, std::abs(homogeneous_norm(g, inverse(g, x)) - nx) / (1.0 + nx));
    const double l = lam(rng);
    hom = std::max(hom, rel(dilate(g, l, multiply(g, x, y)),
                            multiply(g, dilate(g, l, x), dilate(g, l, y))));
    homog = std::max(homog, std::abs(homogeneous_norm(g, dilate(g, l, x)) - l * nx) /
                                (1.0 + l * nx));
  }
  add("associativity", assoc, 1e-12);
  add("inverse", inv, 1e-12);
  add("gauge symmetry", sym, 1e-12);
  add("dilation homomorphism", hom, 1e-12);
  add("gauge homogeneity", homog, 1e-12);

  // Left-invariant frame against central differences of the group law.
  double frame = 0.0;
  const double eps = 1e-4;
  for (int s = 0; s < std::min(samples, 1000); ++s) {
    const Point x = random_point(g, rng, 2.0);
    const FrameMatrix fr = horizontal_frame(g, x);
    for (int j = 0; j < g.n1(); ++j) {
      LayerVector e = LayerVector::Zero(g.n1());
      e[j] = eps;
      const Point xp = multiply(g, x, exp_horizontal(g, HorizontalVector{e}));
      const Point xm = multiply(g, x, exp_horizontal(g, HorizontalVector{-e}));
      const FlatVector fd = (xp.flat() - xm.flat()) / (2.0 * eps);
      frame = std::max(frame, (fd - fr.col(j)).norm());
    }
  }
  add("frame matches group law", frame, 1e-8);

  const double ner = estimate_ner_constant(g, std::min(samples, 20000), seed);
  out.push_back({"ner constant finite" + std::string(g.is_abelian() ? " and <= 1" : ""),
                 std::isfinite(ner) && (!g.is_abelian() || ner <= 1.0 + 1e-9), ner,
                 g.is_abelian() ? 1.0 : std::numeric_limits<double>::infinity()});

  const int res = std::max(8, static_cast<int>(std::pow(2.0e6, 1.0 / g.dim())));
  const double unit = haar_volume(
      g, [&](const Point& p) { return homogeneous_norm(g, p) < 1.0; },
      gauge_ball_box(g, 1.0), res);
  add("unit ball measure", std::abs(unit - 1.0), 0.02);

  CoordinateBox box{FlatVector::Constant(g.dim(), -0.5), FlatVector::Constant(g.dim(), 0.5)};
  const double v0 = haar_volume(g, [&](const Point& p) { return box.contains(p.flat()); },
                                box, res);
  double shift = 0.0;
  for (int s = 0; s < 3; ++s) {
    const Point a = random_point(g, rng, 1.0);
    const Point ai = inverse(g, a);
    const double v = haar_volume(
        g, [&](const Point& p) { return box.contains(multiply(g, ai, p).flat()); },
        left_translate_box(g, a, box), res);
    shift = std::max(shift, std::abs(v - v0) / v0);
  }
  add("measure left invariance", shift, 0.02);

  const double margin = m.variant() == MetricVariant::kLq ? 0.05 : 0.0;
  const AxiomReport ax = check_axioms(g, m, std::min(samples, 1000), seed, 1.0, margin);
  out.push_back({"metric axioms", ax.ok(),
                 static_cast<double>(ax.homogeneity_failures + ax.positivity_failures +
                                     ax.convexity_failures),
                 0.0});

  std::normal_distribution<double> normal;
  double fenchel = 0.0, bidual = 0.0;
  for (int s = 0; s < std::min(samples, 1000); ++s) {
    const Point x = random_point(g, rng, 1.0);
    LayerVector w(g.n1()), v(g.n1());
    for (int i = 0; i < g.n1(); ++i) {
      w[i] = normal(rng);
      v[i] = normal(rng);
    }
    const double fv = f_eval(m, x, HorizontalVector{v});
    const double hw = h_eval(m, x, Covector{w});
    fenchel = std::max(fenchel, w.dot(v) - hw * fv);
    bidual = std::max(bidual, std::abs(bidual_norm(m, x, HorizontalVector{v}) - fv) / fv);
  }
  add("fenchel inequality", fenchel, 1e-9);
  add("bidual identity", bidual, 1e-6);
  return out;
}

std::vector<MollifyRow> mollify_study(const HorizontalGraph& graph,
                                      const DensityField& rho,
                                      const std::vector<double>& t_list,
                                      double p, double epsilon, int samples,
                                      std::uint64_t seed, const Point& probe) {
  const Grid& g = graph.grid();
  DensityField inner = rho;
  for (std::int64_t i = 0; i < g.size(); ++i) {
    if (g.label(i) != CellLabel::kInterior) inner.values[static_cast<std::size_t>(i)] = 0.0;
  }
  // Sample plate-joining paths: geometric shortest paths from E0 to random
  // E1 nodes.
  std::vector<std::int64_t> e0, e1;
  for (std::int64_t i = 0; i < g.size(); ++i) {
    if (g.label(i) == CellLabel::kPlate0) e0.push_back(i);
    if (g.label(i) == CellLabel::kPlate1) e1.push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<GraphPath> paths;
  if (!e0.empty() && !e1.empty()) {
    const SearchResult sr = shortest_paths_from(graph, e0, {}, true);
    for (int s = 0; s < samples * 4 && static_cast<int>(paths.size()) < samples; ++s) {
      const std::int64_t b = e1[std::uniform_int_distribution<std::size_t>(0, e1.size() - 1)(rng)];
      GraphPath path = trace_path(sr, b);
      if (!path.moves.empty()) paths.push_back(std::move(path));
    }
  }
  if (paths.empty()) throw SolverError("no graph path joins the plates");

  std::vector<MollifyRow> out;
  for (double t : t_list) {
    MollifyRow row;
    row.t = t;
    row.kernel_mass = kernel_mass(g, probe, t);
    const DensityField smooth = mollify_density(rho, t);
    row.lp_error = lp_distance(smooth, inner, p);
    DensityField scaled = smooth;
    for (double& v : scaled.values) v *= 1.0 + epsilon;
    row.min_sampled_length = std::numeric_limits<double>::infinity();
    for (const auto& path : paths) {
      double len = 0.0;
      for (std::size_t k = 0; k < path.moves.size(); ++k) {
        len += graph.rho_cost(path.nodes[k], path.moves[k], scaled.values);
      }
      row.min_sampled_length = std::min(row.min_sampled_length, len);
    }
    row.min_graph_length = min_rho_length(graph, scaled);
    out.push_back(row);
  }
  return out;
}

ContinuityStudy run_continuity_study(const ExperimentConfig& cfg) {
  if (cfg.continuity.plate0.empty() && cfg.continuity.plate1.empty()) {
    throw ConfigError("[continuity] needs plate0 or plate1 expressions in j");
  }
  const Condenser base = cfg.condenser();
  const double h = cfg.solver.h_list.front();
  std::vector<std::pair<Region, Region>> plates;
  for (int j = 1; j <= cfg.continuity.levels; ++j) {
    const std::map<std::string, double> b{{"j", static_cast<double>(j)}};
    plates.emplace_back(
        cfg.continuity.plate0.empty() ? base.plate0 : parse_region(cfg.continuity.plate0, b),
        cfg.continuity.plate1.empty() ? base.plate1 : parse_region(cfg.continuity.plate1, b));
  }
  const ModulusOptions opt = modulus_options(cfg.solver);
  ContinuityStudy st;
  st.levels = modulus_continuity_experiment(base, h, plates, opt, cfg.solver.graph_radius);
  st.limit = solve_modulus(*build_horizontal_graph(build_grid(base, h), cfg.solver.graph_radius),
                           opt)
                 .value;
  // Shrinking plates can only lower the modulus; allow the solver's own
  // tolerance between consecutive levels.
  const double slack = opt.p * opt.tol;
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& lv : st.levels) {
    if (lv.value > prev * (1.0 + slack)) st.monotone = false;
    prev = lv.value;
  }
  if (!st.levels.empty() && st.levels.back().value < st.limit * (1.0 - slack)) {
    st.monotone = false;
  }
  st.final_deviation =
      st.levels.empty() ? 0.0 : std::abs(st.levels.back().value - st.limit) / st.limit;
  return st;
}

CommandOutcome run_command(const ExperimentConfig& cfg, const std::string& trace_path,
                           const std::string& potential_path) {
  const std::string& c = cfg.command;
  if (c == "modulus") return command_modulus(cfg, trace_path);
  if (c == "capacity") return command_capacity(cfg, trace_path, potential_path);
  if (c == "compare") return command_compare(cfg);
  if (c == "verify-group") return command_verify_group(cfg);
  if (c == "mollify-demo") return command_mollify(cfg);
  if (c == "continuity") return command_continuity(cfg);
  throw ConfigError("unknown command '" + c + "'");
}

}  // namespace capmod::cli
