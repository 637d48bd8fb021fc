#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include "capmod/error.hpp"
#include "capmod_cli/commands.hpp"
#include "capmod_cli/config.hpp"
#include "capmod_cli/report.hpp"

namespace capmod::cli {
namespace {

namespace fs = std::filesystem;

const char* kSmallSquare = R"(
[group]
preset = abelian:2

[metric]
variant = euclidean

[condenser]
domain = box([-1/8, 0], [1 + 1/8, 1])
plate0 = box([-1, -1], [0, 2])
plate1 = box([1, -1], [2, 2])

[solver]
p = 2
h_list = 1/8, 1/16
tol = 1e-4
capacity_tol = 1e-6

[compare]
gap_tol = 0.05
)";

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / ("capmod_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p;
}

int run_cli(const std::string& args, std::string* out = nullptr) {
  const fs::path o = scratch_dir() / "stdout.txt";
  const std::string cmd = std::string(CAPMOD_CLI_PATH) + " " + args + " > " + o.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  if (out) {
    std::ifstream f(o);
    std::stringstream ss;
    ss << f.rdbuf();
    *out = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Config, ParsesSections) {
  const ExperimentConfig cfg = parse_config(kSmallSquare);
  EXPECT_EQ(cfg.group.dim(), 2);
  EXPECT_EQ(cfg.metric.variant(), MetricVariant::kEuclidean);
  ASSERT_EQ(cfg.solver.h_list.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.solver.h_list[1], 1.0 / 16);
  EXPECT_DOUBLE_EQ(cfg.solver.modulus.tol, 1e-4);
  EXPECT_DOUBLE_EQ(cfg.solver.capacity.tol, 1e-6);
  EXPECT_DOUBLE_EQ(cfg.gap_tol, 0.05);
  const Condenser c = cfg.condenser();
  EXPECT_TRUE(c.plate0.contains(c.group, c.group.make_point({-0.5, 0.5})));
  EXPECT_FALSE(c.domain.contains(c.group, c.group.make_point({1.2, 0.5})));
}

TEST(Config, MetricVariantsAndWeights) {
  const ExperimentConfig r = parse_config(R"(
[group]
preset = heisenberg:1
[metric]
variant = riemannian
a = 1 + x^2, 0, 0, 1 + y^2
[condenser]
domain = ball(3)
plate0 = ball(1/2)
plate1 = shell(2, 3)
weight = 1 + z^2
)");
  EXPECT_EQ(r.metric.variant(), MetricVariant::kRiemannian);
  const Point x = r.group.make_point({2, 0}, {1});
  EXPECT_NEAR(f_eval(r.metric, x, r.group.make_horizontal({1, 0})), std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(r.condenser().weight_at(x), 2.0, 1e-12);

  const ExperimentConfig q = parse_config(R"(
[group]
n1 = 2
n2 = 1
brackets = 0, 1, -1, 0
[metric]
variant = lq
q = 3
scale = 2
[condenser]
domain = ball(3)
plate0 = ball(1/2)
plate1 = shell(2, 3)
)");
  EXPECT_EQ(q.group.homogeneous_dim(), 4);
  EXPECT_NEAR(f_eval(q.metric, q.group.identity(), q.group.make_horizontal({1, 1})),
              2.0 * std::cbrt(2.0), 1e-12);

  const ExperimentConfig c = parse_config(R"(
[group]
preset = abelian:2
[metric]
variant = custom
f = abs(xi1) + 2 * abs(xi2)
[condenser]
domain = ball(3)
plate0 = ball(1/2)
plate1 = shell(2, 3)
)");
  EXPECT_NEAR(f_eval(c.metric, c.group.identity(), c.group.make_horizontal({1, -1})), 3.0, 1e-12);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("[group]\npreset = lie:2\n"), ConfigError);
  EXPECT_THROW(parse_config("[group]\nn1 = 2\nn2 = 1\nbrackets = 0, 1, 1, 0\n"), ConfigError);
  EXPECT_THROW(parse_config("not an ini ["), ConfigError);
  EXPECT_THROW(parse_config("[group]\npreset = abelian:2\n[metric]\nvariant = banana\n"), ConfigError);
  EXPECT_THROW(parse_config("[group]\npreset = abelian:2\n[solver]\np = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[group]\npreset = abelian:2\n[solver]\nh = -1\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/condenser.ini"), ConfigError);
  EXPECT_THROW(parse_number_list("1/2, , 3"), ConfigError);
}

TEST(Config, NumberListsAndPointVariables) {
  const auto v = parse_number_list("1/16, 1/32 ,2^-6");
  ASSERT_EQ(v.size(), 3u);
  EXPECT_DOUBLE_EQ(v[2], 1.0 / 64);
  const GroupSpec h = GroupSpec::heisenberg(1);
  const auto names = point_variables(h);
  const auto vals = point_values(h, h.make_point({1, 2}, {3}));
  ASSERT_EQ(names.size(), vals.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == "z") EXPECT_EQ(vals[i], 3.0);
    if (names[i] == "y") EXPECT_EQ(vals[i], 2.0);
  }
}

TEST(Report, NumbersUseSeventeenDigits) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.33333333333333331");
  EXPECT_EQ(format_number(INFINITY), "inf");
  EXPECT_EQ(format_number(NAN), "nan");
  Report r;
  r.command = "demo";
  r.summary["x"] = 0.1;
  r.columns = {"a", "b"};
  r.add_row({1.0 / 3.0, "text, with comma"});
  std::ostringstream csv, json, text;
  write_report(csv, r, "csv");
  write_report(json, r, "json");
  write_report(text, r, "text");
  EXPECT_EQ(csv.str(), "a,b\n0.33333333333333331,\"text, with comma\"\n");
  EXPECT_NE(json.str().find("\"x\":0.10000000000000001"), std::string::npos);
  EXPECT_NE(json.str().find("\"a\":0.33333333333333331"), std::string::npos);
  EXPECT_NE(text.str().find("0.333333"), std::string::npos);
  EXPECT_THROW(write_report(text, r, "xml"), ConfigError);
}

TEST(Commands, CompareOnSquare) {
  ExperimentConfig cfg = parse_config(kSmallSquare);
  const ComparisonReport cr = run_refinement(cfg);
  ASSERT_EQ(cr.rows.size(), 2u);
  for (const ComparisonRow& row : cr.rows) {
    EXPECT_NEAR(row.modulus * M_PI, 1.0, 0.05);
    EXPECT_NEAR(row.capacity * M_PI, 1.0, 0.05);
    EXPECT_LE(row.gap, 0.05);
    EXPECT_GE(row.fenchel_min_length, 1.0 - 3 * row.h);
    EXPECT_LE(row.bridge_potential_energy, row.bridge_density_energy * 1.05 + row.h);
  }
  EXPECT_TRUE(cr.within_tolerance);
  cfg.command = "compare";
  EXPECT_EQ(run_command(cfg).exit_code, 0);
}

TEST(Commands, SingleSpacingGivesOneRow) {
  ExperimentConfig cfg = parse_config(kSmallSquare);
  cfg.solver.h_list = {1.0 / 8};
  cfg.command = "modulus";
  const CommandOutcome o = run_command(cfg);
  EXPECT_EQ(o.report.rows.size(), 1u);
  EXPECT_EQ(o.exit_code, 0);
}

TEST(Commands, VerifyGroupPasses) {
  for (const char* preset : {"heisenberg:1", "abelian:2"}) {
    const GroupSpec g = GroupSpec::from_preset(preset);
    const auto checks = verify_group(g, MetricSpec::euclidean(g.n1()), 2000, 1);
    ASSERT_FALSE(checks.empty());
    for (const InvariantCheck& c : checks) EXPECT_TRUE(c.pass) << preset << ' ' << c.name << ' ' << c.worst;
  }
}

TEST(Binary, DeterministicMachineOutput) {
  const fs::path cfg = write_file("square.ini", kSmallSquare);
  std::string a, b;
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --command compare --format json --seed 3", &a), 0);
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --command compare --format json --seed 3", &b), 0);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("\"command\":\"compare\""), std::string::npos);
  std::string csv;
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --command modulus --h 0.125 --format csv", &csv), 0);
  EXPECT_EQ(csv.substr(0, 10), "h,modulus,");
}

TEST(Binary, ExitCodes) {
  const fs::path cfg = write_file("square.ini", kSmallSquare);
  EXPECT_EQ(run_cli("--config /nonexistent.ini --command modulus"), 2);
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --command frobnicate"), 2);
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --command modulus --p 1"), 2);
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --command modulus --h 0.125 --h-list 0.1"), 2);
  const fs::path bad = write_file("bad.ini", "[group]\nn1 = 2\nn2 = 1\nbrackets = 0, 1, 1, 0\n");
  EXPECT_EQ(run_cli("--config " + bad.string() + " --command verify-group"), 2);
  // Plates that cannot be resolved at this spacing.
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --command modulus --h 4"), 2);
  // An iteration cap that cannot be met is reported as a tolerance failure.
  const fs::path capped = write_file("capped.ini", R"(
[group]
preset = abelian:2
[condenser]
domain = ball(e + 0.1)
plate0 = ball(1)
plate1 = shell(e, e + 0.1)
[solver]
h = 1/8
tol = 1e-4
max_iter = 1
)");
  EXPECT_EQ(run_cli("--config " + capped.string() + " --command modulus"), 1);
  EXPECT_EQ(run_cli("--config " + fs::path(CAPMOD_CONFIG_DIR "/heisenberg_ring.ini").string() +
                    " --command verify-group"),
            0);
}

TEST(Binary, SideOutputs) {
  const fs::path cfg = write_file("square.ini", kSmallSquare);
  const fs::path trace = scratch_dir() / "trace.csv", pot = scratch_dir() / "u.csv";
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --command capacity --h 0.125 --trace " + trace.string() +
                    " --potential " + pot.string()),
            0);
  std::ifstream t(trace), u(pot);
  std::string line;
  std::getline(t, line);
  EXPECT_EQ(line, "iteration,energy");
  std::getline(u, line);
  EXPECT_EQ(line, "c1,c2,label,u");
}

}  // namespace
}  // namespace capmod::cli
