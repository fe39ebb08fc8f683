#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tns/diagnostics.hpp"
#include "tns/integrator.hpp"
#include "tns/model.hpp"
#include "tns/random.hpp"
#include "tns/regime.hpp"

namespace tns {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ForcingSpec {
  std::string kind = "single_mode";  // single_mode | explicit
  double g1 = 1.0;
  std::vector<double> values;
  std::optional<std::size_t> support_bound;

  Forcing build(std::size_t n_modes) const;
};

struct InitialSpec {
  std::string kind = "zero";  // zero | single_mode | random_nonneg | explicit
  std::size_t mode = 1;
  double amplitude = 1.0;
  std::optional<double> radius;  // random_nonneg; defaults to |g|/nu (1 when that is zero)
  std::vector<double> values;

  StateVec build(std::size_t n_modes, double default_radius, Rng& rng) const;
};

struct SweepSpec {
  double alpha_min = 0.2;
  double alpha_max = 2.0;
  std::size_t alpha_points = 32;
  double beta_min = 1.05;
  double beta_max = 3.5;
  std::size_t beta_points = 32;
  std::size_t n_coarse = 16;
  std::size_t n_fine = 32;
  bool correspondence_points = true;  // append the d = 2..5 exponent pairs
  ClassifierRules rules;
};

struct RefineSpec {
  std::vector<std::size_t> n_values{32, 64, 128};
};

struct ProbeSpec {
  std::size_t ensemble = 8;
  std::optional<double> burn_in;  // default 5 / nu
  double tolerance = 1e-4;        // report counts as stable when successive levels differ by less
};

/// One experiment description. Model fields sit at top level in the JSON.
struct RunConfig {
  ModelParams model;
  double t_end = 10.0;
  ForcingSpec g;
  InitialSpec u0;
  IntegratorConfig integrator;
  SweepSpec sweep;
  RefineSpec refine;
  ProbeSpec probe;
  std::uint64_t seed = 0;
};

/// Parses and validates a JSON config. Throws ConfigError.
RunConfig parse_config(const std::string& json_text);
/// Reads a config file. Throws IoError when unreadable, ConfigError when invalid.
RunConfig load_config(const std::filesystem::path& path);

/// Radius |g|/nu of the absorbing ball, or 1 when it is zero or undefined.
double default_radius(const ModelParams& params, const Forcing& g);

/// Runs fn(i) for i in [0, count) across up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

// ---- single runs ----------------------------------------------------------

struct Verdict {
  double value = 0.0;
  double bound = 0.0;
  bool applies = true;
  bool pass = true;
};

struct RunSummary {
  Termination termination = Termination::completed;
  NormReport peak;
  std::optional<double> quasi_blowup_time;
  Verdict energy_inequality;
  Verdict positivity;
  Verdict absorbing_ball;
  std::optional<RiccatiFit> riccati;
  std::string riccati_note;  // why the fit is absent
  bool passed() const;
};

struct SimulationResult {
  Trajectory trajectory;
  RunSummary summary;
};

SimulationResult run_simulation(const RunConfig& cfg);
RunSummary summarize(const Trajectory& traj, const StateVec& u0);

/// Half-rise Riccati fit of Theta with the given gamma; nullopt when Theta is
/// unavailable or the fit has too few samples (reason stored when given).
std::optional<RiccatiFit> growth_fit(const Trajectory& traj, double gamma, std::string* reason = nullptr);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
std::string summary_json(const RunConfig& cfg, const RunSummary& s, const std::string& command);

// ---- sweep ------------------------------------------------------------------

struct SweepPoint {
  double alpha = 0.0;
  double beta = 0.0;
  AnalyticLabel analytic = AnalyticLabel::gap;
  EmpiricalLabel empirical = EmpiricalLabel::unresolved;
  std::optional<double> peak_blowup_norm;
  std::optional<double> quasi_blowup_time;
  std::optional<double> riccati_c;
  std::string error;
};

std::vector<SweepPoint> sweep_grid(const SweepSpec& spec);
SweepPoint evaluate_point(const RunConfig& cfg, double alpha, double beta);
std::vector<SweepPoint> run_sweep(const RunConfig& cfg, unsigned threads);
void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points);

// ---- refinement ---------------------------------------------------------------

struct RefineRow {
  std::size_t n_modes = 0;
  bool ok = false;
  double peak_blowup_norm = 0.0;
  double peak_enstrophy = 0.0;
  std::optional<double> quasi_blowup_time;  // first sample above the configured threshold
  std::optional<double> growth_ratio;       // against the previous successful row
  std::string error;
};

/// Runs every N in cfg.refine.n_values to t_end without early termination.
/// Throws ConfigError for N < 8.
std::vector<RefineRow> run_refine(const RunConfig& cfg, unsigned threads);
void write_refine_csv(std::ostream& os, const std::vector<RefineRow>& rows);

// ---- attractor probe -------------------------------------------------------

struct ProbeLevel {
  double burn_in = 0.0;
  double min_coordinate = 0.0;
};

struct ProbeResult {
  std::vector<ProbeLevel> levels;
  double report = 0.0;
  bool stabilized = false;
  std::size_t support_bound = 0;
  std::size_t failed_members = 0;
};

/// Ensemble of random states from the ball of radius |g|/nu, alternating
/// nonnegative and sign-mixed members, integrated to t_end. Levels double the
/// burn-in from 5/nu while it stays below t_end.
ProbeResult run_attractor_probe(const RunConfig& cfg, unsigned threads);

// ---- inviscid runs ----------------------------------------------------------

struct EulerReport {
  Trajectory trajectory;
  double energy_drift = 0.0;        // relative
  double monotonicity_violation = 0.0;
  double monotonicity_budget = 0.0;
  double late_adjacent_product = 0.0;   // at t_end, relative to |u0|^2
  double mid_adjacent_product = 0.0;    // at t_end / 2, relative to |u0|^2
  double min_coefficient = 0.0;
  bool passed() const;
};

/// Requires nu == 0. Throws ConfigError otherwise.
EulerReport run_euler(const RunConfig& cfg);

// ---- toy systems -------------------------------------------------------------

struct ToyRow {
  double t = 0.0;
  double radius_strong = 0.0;
  double radius_weak = 0.0;
};

struct ToyTable {
  std::string name;
  std::vector<ToyRow> rows;
};

std::vector<ToyTable> run_toy_examples(std::uint64_t seed);
void write_toy_csv(std::ostream& os, const ToyTable& table);

// ---- command layer ------------------------------------------------------------

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

enum ExitCode : int { exit_ok = 0, exit_invariant = 1, exit_config = 2, exit_io = 3 };

/// Each command loads the config (when it takes one), writes its outputs into
/// out_dir and returns an exit code. Diagnostics go to `log`.
int cmd_simulate(const CommandOptions& opt, std::ostream& log);
int cmd_sweep(const CommandOptions& opt, std::ostream& log);
int cmd_refine(const CommandOptions& opt, std::ostream& log);
int cmd_attractor_probe(const CommandOptions& opt, std::ostream& log);
int cmd_euler(const CommandOptions& opt, std::ostream& log);
int cmd_examples(const CommandOptions& opt, std::ostream& log);

}  // namespace tns
