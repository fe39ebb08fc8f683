#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "tns/experiments.hpp"

using namespace tns;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tns_lab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const char* kZeroConfig = R"({"alpha": 1.0, "beta": 2.0, "nu": 1.0, "gamma": 0.5, "n_modes": 8, "t_end": 0.5,
  "g": {"kind": "explicit", "values": []}, "u0": {"kind": "zero"}})";

}  // namespace

TEST(Config, Defaults) {
  const RunConfig c = parse_config("{}");
  EXPECT_DOUBLE_EQ(c.t_end, 10.0);
  EXPECT_EQ(c.g.kind, "single_mode");
  EXPECT_EQ(c.u0.kind, "zero");
  EXPECT_EQ(c.refine.n_values, (std::vector<std::size_t>{32, 64, 128}));
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(parse_config(R"({"alpah": 1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"alpha": "one"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"n_modes": -3})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"beta": 0.5})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"nu": -1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"t_end": 0})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"g": {"kind": "explicit", "values": [1, -1]}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"u0": {"kind": "single_mode", "mode": 900}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"integrator": {"rel_tol": 0}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"sweep": {"n_coarse": 16, "n_fine": 16}})"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), IoError);
}

TEST(Config, UnderResolvedRefinementIsRejected) {
  RunConfig c = parse_config(R"({"refine": {"n_values": [4, 16]}, "t_end": 0.1})");
  EXPECT_THROW(run_refine(c, 1), ConfigError);
}

TEST(Labels, AnalyticExamples) {
  EXPECT_EQ(analytic_label(1.0, 1.5), AnalyticLabel::global_regular);
  EXPECT_EQ(analytic_label(2.0 / 3.0, 11.0 / 6.0), AnalyticLabel::local_regular);
  EXPECT_EQ(analytic_label(2.0 / 3.0, 3.0), AnalyticLabel::blowup);
  EXPECT_EQ(analytic_label(1.0, 2.6), AnalyticLabel::gap);
  // Boundary values take the earlier label.
  EXPECT_EQ(analytic_label(1.0, 2.0), AnalyticLabel::global_regular);
  EXPECT_EQ(analytic_label(1.0, 3.0), AnalyticLabel::gap);
}

TEST(Labels, ClassifierRules) {
  RefinementEvidence ev;
  ev.initial_bound = 10.0;
  EXPECT_EQ(classify(ev), EmpiricalLabel::bounded_enstrophy);
  ev.peak_enstrophy_coarse = 20.0;
  ev.peak_enstrophy_fine = 20.1;
  EXPECT_EQ(classify(ev), EmpiricalLabel::bounded_enstrophy);
  ev.peak_enstrophy_fine = 30.0;
  EXPECT_EQ(classify(ev), EmpiricalLabel::transient_growth);
  ev.peak_blowup_coarse = 10.0;
  ev.peak_blowup_fine = 13.0;
  ev.event_fired = true;
  EXPECT_EQ(classify(ev), EmpiricalLabel::quasi_blowup);
  ev.peak_blowup_fine = 11.0;
  EXPECT_EQ(classify(ev), EmpiricalLabel::transient_growth);
  ev.resolved = false;
  EXPECT_EQ(classify(ev), EmpiricalLabel::unresolved);
}

TEST(Csv, TrajectoryFormat) {
  RunConfig c = parse_config(R"({"n_modes": 8, "t_end": 0.05, "g": {"g1": 1.0}})");
  const SimulationResult r = run_simulation(c);
  std::ostringstream os;
  write_trajectory_csv(os, r.trajectory);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,energy,enstrophy,gamma_norm,blowup_norm,theta,min_coeff,energy_residual");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7);
  }
  EXPECT_EQ(rows, r.trajectory.size());
  // Round-trip precision: every value is printed with 17 significant digits.
  std::ostringstream one;
  write_trajectory_csv(one, r.trajectory);
  EXPECT_NE(one.str().find("0.050000000000000003"), std::string::npos);
}

TEST(Commands, ZeroConfigGivesZeroTrajectory) {
  const fs::path dir = scratch_dir("zero");
  CommandOptions opt;
  opt.config = write_file(dir, "zero.json", kZeroConfig);
  opt.out_dir = dir / "out";
  std::ostringstream log;
  ASSERT_EQ(cmd_simulate(opt, log), exit_ok) << log.str();
  std::istringstream csv(slurp(opt.out_dir / "trajectory.csv"));
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');  // time
    while (std::getline(cells, cell, ',')) {
      if (!cell.empty()) EXPECT_EQ(std::stod(cell), 0.0) << line;
    }
  }
  const auto summary = nlohmann::json::parse(slurp(opt.out_dir / "summary.json"));
  EXPECT_EQ(summary.at("termination"), "completed");
}

TEST(Commands, ExitCodes) {
  const fs::path dir = scratch_dir("codes");
  std::ostringstream log;
  CommandOptions opt;
  opt.out_dir = dir / "out";
  EXPECT_EQ(cmd_simulate(opt, log), exit_config);
  opt.config = write_file(dir, "bad.json", R"({"unknown": 1})");
  EXPECT_EQ(cmd_simulate(opt, log), exit_config);
  opt.config = dir / "missing.json";
  EXPECT_EQ(cmd_simulate(opt, log), exit_io);
  opt.config = write_file(dir, "zero.json", kZeroConfig);
  write_file(dir, "blocker", "x");
  opt.out_dir = dir / "blocker" / "out";
  EXPECT_EQ(cmd_simulate(opt, log), exit_io);
  opt.out_dir = dir / "out";
  EXPECT_EQ(cmd_euler(opt, log), exit_config);  // viscous config
  EXPECT_EQ(cmd_simulate(opt, log), exit_ok);
}

TEST(Sweep, GridAndDeterminism) {
  RunConfig c = parse_config(R"({"t_end": 0.5, "g": {"g1": 2.0},
    "sweep": {"alpha_min": 0.5, "alpha_max": 1.5, "alpha_points": 2, "beta_min": 1.5, "beta_max": 3.0,
              "beta_points": 2, "n_coarse": 8, "n_fine": 16}})");
  EXPECT_EQ(sweep_grid(c.sweep).size(), 4u + 4u);
  c.sweep.correspondence_points = false;
  const auto grid = sweep_grid(c.sweep);
  ASSERT_EQ(grid.size(), 4u);
  EXPECT_DOUBLE_EQ(grid.front().alpha, 0.5);
  EXPECT_DOUBLE_EQ(grid.back().beta, 3.0);
  std::ostringstream a, b;
  write_sweep_csv(a, run_sweep(c, 1));
  write_sweep_csv(b, run_sweep(c, 2));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')),
            "alpha,beta,analytic_label,empirical_label,peak_blowup_norm,quasi_blowup_time,riccati_c");
}

TEST(Refine, RegularPointSaturates) {
  RunConfig c = parse_config(R"({"alpha": 1.0, "beta": 1.5, "t_end": 3.0, "g": {"g1": 5.0},
    "refine": {"n_values": [16, 32]}})");
  const auto rows = run_refine(c, 1);
  ASSERT_EQ(rows.size(), 2u);
  ASSERT_TRUE(rows[0].ok && rows[1].ok);
  EXPECT_NEAR(rows[1].peak_enstrophy, rows[0].peak_enstrophy, 1e-6 * rows[1].peak_enstrophy);
  ASSERT_TRUE(rows[1].growth_ratio.has_value());
  std::ostringstream os;
  write_refine_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
            "n_modes,status,peak_blowup_norm,peak_enstrophy,quasi_blowup_time,growth_ratio");
}

TEST(Toy, ExampleTables) {
  const auto tables = run_toy_examples(0);
  ASSERT_EQ(tables.size(), 3u);
  for (const auto& t : tables) {
    ASSERT_FALSE(t.rows.empty());
    std::ostringstream os;
    write_toy_csv(os, t);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t,radius_strong,radius_weak");
  }
}

TEST(Parallel, PropagatesExceptions) {
  std::vector<int> hit(16, 0);
  parallel_for(16, 4, [&](std::size_t i) { hit[i] = 1; });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 16);
  EXPECT_THROW(parallel_for(8, 2, [](std::size_t i) { if (i == 5) throw std::runtime_error("x"); }),
               std::runtime_error);
}
