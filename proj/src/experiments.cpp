#include "tns/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "tns/toy_systems.hpp"

namespace tns {

using nlohmann::json;

namespace {

constexpr double kNoThreshold = std::numeric_limits<double>::max();

std::string num(double x) { return fmt::format("{:.17g}", x); }
std::string num(const std::optional<double>& x) { return x ? num(*x) : std::string(); }

json opt_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

// ---- config parsing ----

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

std::size_t read_count(const json& j, const char* key, std::size_t fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError("field '" + std::string(key) + "' in " + where + " must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

ForcingSpec parse_forcing(const json& j) {
  check_keys(j, {"kind", "g1", "values", "support_bound"}, "g");
  ForcingSpec f;
  read(j, "kind", f.kind, "g");
  read(j, "g1", f.g1, "g");
  read(j, "values", f.values, "g");
  if (j.contains("support_bound")) f.support_bound = read_count(j, "support_bound", 0, "g");
  if (f.kind != "single_mode" && f.kind != "explicit") throw ConfigError("g.kind must be single_mode or explicit");
  return f;
}

InitialSpec parse_initial(const json& j) {
  check_keys(j, {"kind", "mode", "amplitude", "radius", "values"}, "u0");
  InitialSpec u;
  read(j, "kind", u.kind, "u0");
  u.mode = read_count(j, "mode", u.mode, "u0");
  read(j, "amplitude", u.amplitude, "u0");
  if (j.contains("radius")) {
    double r = 0.0;
    read(j, "radius", r, "u0");
    u.radius = r;
  }
  read(j, "values", u.values, "u0");
  static const std::set<std::string> kinds{"zero", "single_mode", "random_nonneg", "explicit"};
  if (!kinds.count(u.kind)) throw ConfigError("u0.kind must be zero, single_mode, random_nonneg or explicit");
  return u;
}

IntegratorConfig parse_integrator(const json& j) {
  check_keys(j, {"rel_tol", "abs_tol", "dt_init", "dt_min", "dt_max", "sample_interval", "blowup_threshold", "max_steps"},
             "integrator");
  IntegratorConfig c;
  const std::string w = "integrator";
  read(j, "rel_tol", c.rel_tol, w);
  read(j, "abs_tol", c.abs_tol, w);
  read(j, "dt_init", c.dt_init, w);
  read(j, "dt_min", c.dt_min, w);
  read(j, "dt_max", c.dt_max, w);
  read(j, "sample_interval", c.sample_interval, w);
  read(j, "blowup_threshold", c.blowup_threshold, w);
  c.max_steps = read_count(j, "max_steps", c.max_steps, w);
  return c;
}

SweepSpec parse_sweep(const json& j) {
  check_keys(j,
             {"alpha_min", "alpha_max", "alpha_points", "beta_min", "beta_max", "beta_points", "n_coarse", "n_fine",
              "correspondence_points", "enstrophy_factor", "saturation_tol", "growth_min"},
             "sweep");
  SweepSpec s;
  const std::string w = "sweep";
  read(j, "alpha_min", s.alpha_min, w);
  read(j, "alpha_max", s.alpha_max, w);
  s.alpha_points = read_count(j, "alpha_points", s.alpha_points, w);
  read(j, "beta_min", s.beta_min, w);
  read(j, "beta_max", s.beta_max, w);
  s.beta_points = read_count(j, "beta_points", s.beta_points, w);
  s.n_coarse = read_count(j, "n_coarse", s.n_coarse, w);
  s.n_fine = read_count(j, "n_fine", s.n_fine, w);
  read(j, "correspondence_points", s.correspondence_points, w);
  read(j, "enstrophy_factor", s.rules.enstrophy_factor, w);
  read(j, "saturation_tol", s.rules.saturation_tol, w);
  read(j, "growth_min", s.rules.growth_min, w);
  if (s.alpha_points == 0 || s.beta_points == 0) throw ConfigError("sweep grid needs at least one point per axis");
  if (!(s.alpha_min > 0.0) || s.alpha_max < s.alpha_min) throw ConfigError("sweep alpha range is invalid");
  if (!(s.beta_min > 1.0) || s.beta_max < s.beta_min) throw ConfigError("sweep beta range is invalid");
  if (s.n_coarse < 2 || s.n_fine <= s.n_coarse) throw ConfigError("sweep needs 2 <= n_coarse < n_fine");
  return s;
}

RefineSpec parse_refine(const json& j) {
  check_keys(j, {"n_values"}, "refine");
  RefineSpec r;
  read(j, "n_values", r.n_values, "refine");
  if (r.n_values.empty()) throw ConfigError("refine.n_values must not be empty");
  return r;
}

ProbeSpec parse_probe(const json& j) {
  check_keys(j, {"ensemble", "burn_in", "tolerance"}, "probe");
  ProbeSpec p;
  p.ensemble = read_count(j, "ensemble", p.ensemble, "probe");
  if (j.contains("burn_in")) {
    double b = 0.0;
    read(j, "burn_in", b, "probe");
    if (!(b > 0.0)) throw ConfigError("probe.burn_in must be positive");
    p.burn_in = b;
  }
  read(j, "tolerance", p.tolerance, "probe");
  if (p.ensemble == 0) throw ConfigError("probe.ensemble must be positive");
  return p;
}

// ---- outputs ----

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

void finish_output(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw IoError("write failed for " + path.string());
}

void prepare_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

template <class Fn>
void write_file(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream os = open_output(path);
  fn(os);
  finish_output(os, path);
}

double peak_sample(const Trajectory& traj, double NormReport::*field) {
  double m = 0.0;
  for (const auto& d : traj.diagnostics) m = std::max(m, d.*field);
  return m;
}

std::optional<double> first_crossing(const Trajectory& traj, double threshold) {
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.diagnostics[k].blowup_norm > threshold) return traj.times[k];
  }
  return std::nullopt;
}

RunConfig with_seed(RunConfig cfg, const CommandOptions& opt) {
  if (opt.seed) cfg.seed = *opt.seed;
  return cfg;
}

RunConfig require_config(const CommandOptions& opt) {
  if (!opt.config) throw ConfigError("--config is required for this command");
  return with_seed(load_config(*opt.config), opt);
}

template <class Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const ModelError& e) {
    log << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const IoError& e) {
    log << "i/o error: " << e.what() << '\n';
    return exit_io;
  } catch (const std::exception& e) {
    log << "run failed: " << e.what() << '\n';
    return exit_invariant;
  }
}

}  // namespace

// ---- specs ----

Forcing ForcingSpec::build(std::size_t n_modes) const {
  try {
    if (kind == "single_mode") {
      if (!(g1 >= 0.0)) throw ConfigError("g.g1 must be nonnegative");
      return Forcing::single_mode(n_modes, g1);
    }
    if (values.size() > n_modes) throw ConfigError("g.values is longer than n_modes");
    std::vector<double> v(values);
    v.resize(n_modes, 0.0);
    return Forcing(std::move(v), support_bound);
  } catch (const ModelError& e) {
    throw ConfigError(std::string("g: ") + e.what());
  }
}

StateVec InitialSpec::build(std::size_t n_modes, double default_r, Rng& rng) const {
  if (kind == "zero") return StateVec(n_modes);
  if (kind == "single_mode") {
    if (mode < 1 || mode > n_modes) throw ConfigError("u0.mode must lie in 1..n_modes");
    return StateVec::unit(n_modes, mode, amplitude);
  }
  if (kind == "random_nonneg") {
    const double r = radius.value_or(default_r);
    if (!(r >= 0.0)) throw ConfigError("u0.radius must be nonnegative");
    return StateVec(ball_sample(rng, n_modes, r, true));
  }
  if (values.size() > n_modes) throw ConfigError("u0.values is longer than n_modes");
  std::vector<double> v(values);
  v.resize(n_modes, 0.0);
  StateVec s(std::move(v));
  if (!s.all_finite()) throw ConfigError("u0.values must be finite");
  return s;
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  check_keys(j,
             {"description", "alpha", "beta", "nu", "gamma", "n_modes", "t_end", "g", "u0", "integrator", "sweep",
              "refine", "probe", "seed"},
             "config");
  RunConfig c;
  const std::string w = "config";
  read(j, "alpha", c.model.alpha, w);
  read(j, "beta", c.model.beta, w);
  read(j, "nu", c.model.nu, w);
  read(j, "gamma", c.model.gamma, w);
  c.model.n_modes = read_count(j, "n_modes", c.model.n_modes, w);
  read(j, "t_end", c.t_end, w);
  if (j.contains("seed")) c.seed = read_count(j, "seed", 0, w);
  if (j.contains("g")) c.g = parse_forcing(j.at("g"));
  if (j.contains("u0")) c.u0 = parse_initial(j.at("u0"));
  if (j.contains("integrator")) c.integrator = parse_integrator(j.at("integrator"));
  if (j.contains("sweep")) c.sweep = parse_sweep(j.at("sweep"));
  if (j.contains("refine")) c.refine = parse_refine(j.at("refine"));
  if (j.contains("probe")) c.probe = parse_probe(j.at("probe"));
  try {
    c.model.validate();
    c.integrator.validate();
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
  if (!(c.t_end > 0.0)) throw ConfigError("t_end must be positive");
  c.g.build(c.model.n_modes);
  if (c.u0.kind != "random_nonneg") {
    Rng unused(0);
    c.u0.build(c.model.n_modes, 1.0, unused);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

double default_radius(const ModelParams& params, const Forcing& g) {
  const double r = params.nu > 0.0 ? g.norm() / params.nu : 0.0;
  return r > 0.0 ? r : 1.0;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---- single runs ----

bool RunSummary::passed() const {
  auto ok = [](const Verdict& v) { return !v.applies || v.pass; };
  return ok(energy_inequality) && ok(positivity) && ok(absorbing_ball);
}

std::optional<RiccatiFit> growth_fit(const Trajectory& traj, double gamma, std::string* reason) {
  try {
    const ThetaSeries th = theta(traj, gamma);
    const auto [lo, hi] = riccati_growth_window(th);
    return riccati_fit(th, lo, hi);
  } catch (const DiagnosticsError& e) {
    if (reason) *reason = e.what();
    return std::nullopt;
  }
}

RunSummary summarize(const Trajectory& traj, const StateVec& u0) {
  RunSummary s;
  s.termination = traj.terminated;
  s.peak.energy = peak_sample(traj, &NormReport::energy);
  s.peak.enstrophy = peak_sample(traj, &NormReport::enstrophy);
  s.peak.gamma_norm = peak_sample(traj, &NormReport::gamma_norm);
  s.peak.blowup_norm = traj.peak_blowup_norm;
  for (const auto& e : traj.events) {
    if (e.kind == Termination::quasi_blowup) {
      s.quasi_blowup_time = e.time;
      break;
    }
  }

  s.energy_inequality.value = energy_inequality_residual(traj);
  s.energy_inequality.bound = energy_balance_budget(traj);
  s.energy_inequality.pass = s.energy_inequality.value <= s.energy_inequality.bound;

  s.positivity.applies = u0.min_coeff() >= 0.0;
  s.positivity.value = check_positivity(traj);
  s.positivity.bound = -positivity_tolerance(traj);
  s.positivity.pass = s.positivity.value >= s.positivity.bound;

  s.absorbing_ball.applies = traj.params.nu > 0.0;
  if (s.absorbing_ball.applies) {
    const std::vector<double> m = absorbing_ball_margin(traj);
    s.absorbing_ball.value = *std::min_element(m.begin(), m.end());
    s.absorbing_ball.bound = -energy_balance_budget(traj);
    s.absorbing_ball.pass = s.absorbing_ball.value >= s.absorbing_ball.bound;
  }

  if (traj.params.blowup_regime()) {
    s.riccati = growth_fit(traj, traj.params.gamma, &s.riccati_note);
  } else {
    s.riccati_note = "not in the blow-up regime";
  }
  return s;
}

SimulationResult run_simulation(const RunConfig& cfg) {
  const Forcing g = cfg.g.build(cfg.model.n_modes);
  Rng rng(cfg.seed);
  const StateVec u0 = cfg.u0.build(cfg.model.n_modes, default_radius(cfg.model, g), rng);
  SimulationResult r{integrate(u0, cfg.model, g, cfg.t_end, cfg.integrator), {}};
  r.summary = summarize(r.trajectory, u0);
  return r;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  std::vector<double> th;
  try {
    th = theta(traj, traj.params.gamma).values;
  } catch (const DiagnosticsError&) {
    th.clear();
  }
  const std::vector<double> residual = traj.times.empty() ? std::vector<double>{} : energy_balance_series(traj);
  os << "t,energy,enstrophy,gamma_norm,blowup_norm,theta,min_coeff,energy_residual\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const NormReport& d = traj.diagnostics[k];
    os << num(traj.times[k]) << ',' << num(d.energy) << ',' << num(d.enstrophy) << ',' << num(d.gamma_norm) << ','
       << num(d.blowup_norm) << ',' << (k < th.size() ? num(th[k]) : std::string()) << ','
       << num(traj.states[k].min_coeff()) << ',' << num(residual[k]) << '\n';
  }
}

namespace {

json verdict_json(const Verdict& v) {
  if (!v.applies) return nullptr;
  return {{"value", v.value}, {"bound", v.bound}, {"pass", v.pass}};
}

json params_json(const RunConfig& cfg) {
  return {{"alpha", cfg.model.alpha}, {"beta", cfg.model.beta},     {"nu", cfg.model.nu},
          {"gamma", cfg.model.gamma}, {"n_modes", cfg.model.n_modes}, {"t_end", cfg.t_end},
          {"seed", cfg.seed},         {"u0_kind", cfg.u0.kind},       {"g_kind", cfg.g.kind}};
}

}  // namespace

std::string summary_json(const RunConfig& cfg, const RunSummary& s, const std::string& command) {
  json j;
  j["command"] = command;
  j["params"] = params_json(cfg);
  j["termination"] = to_string(s.termination);
  j["analytic_label"] = to_string(analytic_label(cfg.model.alpha, cfg.model.beta));
  j["peak"] = {{"energy", s.peak.energy},
               {"enstrophy", s.peak.enstrophy},
               {"gamma_norm", s.peak.gamma_norm},
               {"blowup_norm", s.peak.blowup_norm}};
  j["quasi_blowup_time"] = opt_json(s.quasi_blowup_time);
  j["energy_inequality"] = verdict_json(s.energy_inequality);
  j["positivity"] = verdict_json(s.positivity);
  j["absorbing_ball"] = verdict_json(s.absorbing_ball);
  if (s.riccati) {
    j["riccati"] = {{"c", s.riccati->c_estimate},
                    {"window_start", s.riccati->window_start},
                    {"window_end", s.riccati->window_end},
                    {"relative_residual", s.riccati->relative_residual},
                    {"samples", s.riccati->samples_used}};
  } else {
    j["riccati"] = nullptr;
    j["riccati_note"] = s.riccati_note;
  }
  j["verdict"] = s.passed() ? "pass" : "fail";
  return j.dump(2) + "\n";
}

// ---- sweep ----

std::vector<SweepPoint> sweep_grid(const SweepSpec& spec) {
  auto axis = [](double lo, double hi, std::size_t n, std::size_t k) {
    return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  };
  std::vector<SweepPoint> pts;
  for (std::size_t i = 0; i < spec.alpha_points; ++i) {
    for (std::size_t j = 0; j < spec.beta_points; ++j) {
      SweepPoint p;
      p.alpha = axis(spec.alpha_min, spec.alpha_max, spec.alpha_points, i);
      p.beta = axis(spec.beta_min, spec.beta_max, spec.beta_points, j);
      pts.push_back(p);
    }
  }
  if (spec.correspondence_points) {
    for (int d = 2; d <= 5; ++d) {
      SweepPoint p;
      p.alpha = 2.0 / d;
      p.beta = 1.5 + 1.0 / d;
      pts.push_back(p);
    }
  }
  for (auto& p : pts) p.analytic = analytic_label(p.alpha, p.beta);
  return pts;
}

SweepPoint evaluate_point(const RunConfig& cfg, double alpha, double beta) {
  SweepPoint p;
  p.alpha = alpha;
  p.beta = beta;
  p.analytic = analytic_label(alpha, beta);

  ModelParams params = cfg.model;
  params.alpha = alpha;
  params.beta = beta;
  if (params.blowup_regime()) params.gamma = default_blowup_gamma(alpha, beta);
  IntegratorConfig ic = cfg.integrator;
  ic.blowup_threshold = kNoThreshold;

  RefinementEvidence ev;
  try {
    Trajectory fine;
    for (const std::size_t n : {cfg.sweep.n_coarse, cfg.sweep.n_fine}) {
      params.n_modes = n;
      const Forcing g = cfg.g.build(n);
      Rng rng(cfg.seed);
      const StateVec u0 = cfg.u0.build(n, default_radius(params, g), rng);
      const TnsModel model(params);
      const double radius = params.nu > 0.0 ? g.norm() / params.nu : 0.0;
      ev.initial_bound = std::max(model.norms(u0).enstrophy, radius);
      Trajectory traj = integrate(u0, params, g, cfg.t_end, ic);
      if (traj.terminated != Termination::completed) {
        ev.resolved = false;
        p.error = std::string("run ended with ") + to_string(traj.terminated);
      }
      const double ens = peak_sample(traj, &NormReport::enstrophy);
      if (n == cfg.sweep.n_coarse) {
        ev.peak_enstrophy_coarse = ens;
        ev.peak_blowup_coarse = traj.peak_blowup_norm;
      } else {
        ev.peak_enstrophy_fine = ens;
        ev.peak_blowup_fine = traj.peak_blowup_norm;
        fine = std::move(traj);
      }
    }
    ev.event_fired = ev.peak_blowup_fine > cfg.integrator.blowup_threshold;
    p.peak_blowup_norm = ev.peak_blowup_fine;
    p.quasi_blowup_time = first_crossing(fine, cfg.integrator.blowup_threshold);
    if (params.blowup_regime()) {
      if (const auto fit = growth_fit(fine, params.gamma)) p.riccati_c = fit->c_estimate;
    }
  } catch (const std::exception& e) {
    ev.resolved = false;
    p.error = e.what();
    p.peak_blowup_norm.reset();
    p.quasi_blowup_time.reset();
    p.riccati_c.reset();
  }
  p.empirical = classify(ev, cfg.sweep.rules);
  return p;
}

std::vector<SweepPoint> run_sweep(const RunConfig& cfg, unsigned threads) {
  std::vector<SweepPoint> pts = sweep_grid(cfg.sweep);
  parallel_for(pts.size(), threads, [&](std::size_t i) { pts[i] = evaluate_point(cfg, pts[i].alpha, pts[i].beta); });
  return pts;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points) {
  os << "alpha,beta,analytic_label,empirical_label,peak_blowup_norm,quasi_blowup_time,riccati_c\n";
  for (const auto& p : points) {
    os << num(p.alpha) << ',' << num(p.beta) << ',' << to_string(p.analytic) << ',' << to_string(p.empirical) << ','
       << num(p.peak_blowup_norm) << ',' << num(p.quasi_blowup_time) << ',' << num(p.riccati_c) << '\n';
  }
}

// ---- refinement ----

std::vector<RefineRow> run_refine(const RunConfig& cfg, unsigned threads) {
  for (const std::size_t n : cfg.refine.n_values) {
    if (n < 8) throw ConfigError("refine: N = " + std::to_string(n) + " is under-resolved (need N >= 8)");
  }
  std::vector<RefineRow> rows(cfg.refine.n_values.size());
  IntegratorConfig ic = cfg.integrator;
  ic.blowup_threshold = kNoThreshold;
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    RefineRow& row = rows[i];
    row.n_modes = cfg.refine.n_values[i];
    try {
      ModelParams params = cfg.model;
      params.n_modes = row.n_modes;
      const Forcing g = cfg.g.build(row.n_modes);
      Rng rng(cfg.seed);
      const StateVec u0 = cfg.u0.build(row.n_modes, default_radius(params, g), rng);
      const Trajectory traj = integrate(u0, params, g, cfg.t_end, ic);
      if (traj.terminated != Termination::completed) {
        row.error = std::string("run ended with ") + to_string(traj.terminated);
        return;
      }
      row.peak_blowup_norm = traj.peak_blowup_norm;
      row.peak_enstrophy = peak_sample(traj, &NormReport::enstrophy);
      row.quasi_blowup_time = first_crossing(traj, cfg.integrator.blowup_threshold);
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });
  const RefineRow* prev = nullptr;
  for (auto& row : rows) {
    if (!row.ok) continue;
    if (prev && prev->peak_blowup_norm > 0.0) row.growth_ratio = row.peak_blowup_norm / prev->peak_blowup_norm;
    prev = &row;
  }
  return rows;
}

void write_refine_csv(std::ostream& os, const std::vector<RefineRow>& rows) {
  os << "n_modes,status,peak_blowup_norm,peak_enstrophy,quasi_blowup_time,growth_ratio\n";
  for (const auto& r : rows) {
    os << r.n_modes << ',' << (r.ok ? "ok" : "failed") << ',' << (r.ok ? num(r.peak_blowup_norm) : "") << ','
       << (r.ok ? num(r.peak_enstrophy) : "") << ',' << num(r.quasi_blowup_time) << ',' << num(r.growth_ratio)
       << '\n';
  }
}

// ---- attractor probe ----

ProbeResult run_attractor_probe(const RunConfig& cfg, unsigned threads) {
  if (!(cfg.model.nu > 0.0)) throw ConfigError("attractor probe requires nu > 0");
  const std::size_t n = cfg.model.n_modes;
  const Forcing g = cfg.g.build(n);
  ProbeResult out;
  if (g.support_bound()) {
    out.support_bound = *g.support_bound();
  } else {
    out.support_bound = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (g[i] != 0.0) out.support_bound = i + 2;
    }
  }
  const double b0 = cfg.probe.burn_in.value_or(5.0 / cfg.model.nu);
  if (!(cfg.t_end > b0)) throw ConfigError("attractor probe needs t_end beyond the burn-in");

  const double radius = default_radius(cfg.model, g);
  Rng rng(cfg.seed);
  std::vector<StateVec> members;
  for (std::size_t k = 0; k < cfg.probe.ensemble; ++k) members.emplace_back(ball_sample(rng, n, radius, k % 2 == 0));

  std::vector<double> burn_ins;
  for (double b = b0; b < cfg.t_end; b *= 2.0) burn_ins.push_back(b);

  // Per member and level, the smallest coordinate over samples past the burn-in.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> mins(members.size(), std::vector<double>(burn_ins.size(), inf));
  std::vector<char> failed(members.size(), 0);
  parallel_for(members.size(), threads, [&](std::size_t m) {
    try {
      const Trajectory traj = integrate(members[m], cfg.model, g, cfg.t_end, cfg.integrator);
      if (traj.terminated != Termination::completed) {
        failed[m] = 1;
        return;
      }
      for (std::size_t k = 0; k < traj.size(); ++k) {
        const double c = traj.states[k].min_coeff();
        for (std::size_t l = 0; l < burn_ins.size(); ++l) {
          if (traj.times[k] >= burn_ins[l]) mins[m][l] = std::min(mins[m][l], c);
        }
      }
    } catch (const std::exception&) {
      failed[m] = 1;
    }
  });
  out.failed_members = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));

  for (std::size_t l = 0; l < burn_ins.size(); ++l) {
    ProbeLevel lvl{burn_ins[l], inf};
    for (std::size_t m = 0; m < members.size(); ++m) {
      if (!failed[m]) lvl.min_coordinate = std::min(lvl.min_coordinate, mins[m][l]);
    }
    out.levels.push_back(lvl);
  }
  out.report = out.levels.back().min_coordinate;
  for (std::size_t l = 1; l < out.levels.size(); ++l) {
    if (std::abs(out.levels[l].min_coordinate - out.levels[l - 1].min_coordinate) <= cfg.probe.tolerance) {
      out.report = out.levels[l].min_coordinate;
      out.stabilized = true;
      break;
    }
  }
  return out;
}

// ---- inviscid runs ----

bool EulerReport::passed() const {
  const bool conserved = !trajectory.forcing.is_zero() || energy_drift <= 1e-9;
  return conserved && monotonicity_violation <= monotonicity_budget && min_coefficient >= -positivity_tolerance(trajectory);
}

EulerReport run_euler(const RunConfig& cfg) {
  if (cfg.model.nu != 0.0) throw ConfigError("euler runs require nu = 0");
  if (!(cfg.model.gamma > 0.0 && cfg.model.gamma <= 1.0)) throw ConfigError("euler runs require 0 < gamma <= 1");
  const Forcing g = cfg.g.build(cfg.model.n_modes);
  Rng rng(cfg.seed);
  const StateVec u0 = cfg.u0.build(cfg.model.n_modes, 1.0, rng);
  if (u0.min_coeff() < 0.0) throw ConfigError("euler runs require nonnegative initial data");
  EulerReport r;
  r.trajectory = integrate(u0, cfg.model, g, cfg.t_end, cfg.integrator);
  const Trajectory& tr = r.trajectory;
  r.energy_drift = relative_energy_drift(tr);
  r.monotonicity_violation = euler_monotonicity(tr, cfg.model.gamma);
  r.monotonicity_budget = euler_monotonicity_budget(tr, cfg.model.gamma);
  r.min_coefficient = check_positivity(tr);
  const double e0 = inner(u0, u0);
  if (e0 > 0.0 && tr.size() > 0) {
    const double half = 0.5 * tr.end_time();
    std::size_t mid = 0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      if (std::abs(tr.times[k] - half) < std::abs(tr.times[mid] - half)) mid = k;
    }
    r.late_adjacent_product = max_adjacent_product(tr.states.back()) / e0;
    r.mid_adjacent_product = max_adjacent_product(tr.states[mid]) / e0;
  }
  return r;
}

// ---- toy systems ----

std::vector<ToyTable> run_toy_examples(std::uint64_t seed) {
  using namespace evolution;
  std::vector<ToyTable> out;
  auto table = [](const std::string& name, const ToySystem& sys, const BoxSet& set,
                  const std::vector<ToyState>& ensemble, const std::vector<double>& times) {
    ToyTable t{name, {}};
    for (const double s : times) {
      t.rows.push_back({s, attraction_radius(sys, set, s, MetricKind::strong, ensemble),
                        attraction_radius(sys, set, s, MetricKind::weak, ensemble)});
    }
    return t;
  };

  const ToySystem shift = ToySystem::shift();
  out.push_back(table("shift", shift, BoxSet::origin(shift.size), shift_bump_ensemble(shift, 16, seed),
                      {0, 1, 2, 4, 8, 16, 32, 48}));

  const ToySystem decay = ToySystem::mode_decay(256);
  std::vector<ToyState> ens = unit_basis_ensemble(decay, decay.size);
  for (auto& u : random_ball_ensemble(decay, 32, seed)) ens.push_back(std::move(u));
  out.push_back(table("mode_decay", decay, BoxSet::origin(decay.size), ens,
                      {0, 1, 2, 5, 10, 20, 30, 40, 50, 60, 80, 100, 150, 200}));

  const ToySystem frozen = ToySystem::frozen_first(64);
  std::vector<ToyState> ens2 = unit_basis_ensemble(frozen, frozen.size);
  for (auto& u : random_ball_ensemble(frozen, 32, seed)) ens2.push_back(std::move(u));
  out.push_back(table("frozen_first", frozen, BoxSet::first_mode_interval(frozen.size), ens2,
                      {0, 0.5, 1, 2, 3, 4, 6, 8, 10}));
  return out;
}

void write_toy_csv(std::ostream& os, const ToyTable& table) {
  os << "t,radius_strong,radius_weak\n";
  for (const auto& r : table.rows) os << num(r.t) << ',' << num(r.radius_strong) << ',' << num(r.radius_weak) << '\n';
}

// ---- commands ----

int cmd_simulate(const CommandOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig cfg = require_config(opt);
    prepare_out_dir(opt.out_dir);
    const SimulationResult r = run_simulation(cfg);
    write_file(opt.out_dir / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, r.trajectory); });
    write_file(opt.out_dir / "summary.json", [&](std::ostream& os) { os << summary_json(cfg, r.summary, "simulate"); });
    log << "simulate: " << to_string(r.summary.termination) << ", " << r.trajectory.size() << " samples, verdict "
        << (r.summary.passed() ? "pass" : "fail") << '\n';
    return r.summary.passed() ? exit_ok : exit_invariant;
  });
}

int cmd_sweep(const CommandOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig cfg = require_config(opt);
    prepare_out_dir(opt.out_dir);
    const std::vector<SweepPoint> pts = run_sweep(cfg, opt.threads);
    write_file(opt.out_dir / "sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, pts); });

    bool consistent = true;
    json counts = json::object();
    json failures = json::array();
    for (const auto& p : pts) {
      const std::string key = std::string(to_string(p.analytic)) + "/" + to_string(p.empirical);
      counts[key] = counts.value(key, 0) + 1;
      if (!p.error.empty()) failures.push_back({{"alpha", p.alpha}, {"beta", p.beta}, {"error", p.error}});
      if (p.analytic == AnalyticLabel::global_regular && p.empirical == EmpiricalLabel::quasi_blowup) consistent = false;
    }
    json j = {{"command", "sweep"},     {"points", pts.size()},   {"seed", cfg.seed},
              {"counts", counts},       {"failures", failures},   {"labels_consistent", consistent},
              {"n_coarse", cfg.sweep.n_coarse}, {"n_fine", cfg.sweep.n_fine}, {"t_end", cfg.t_end},
              {"nu", cfg.model.nu},     {"blowup_threshold", cfg.integrator.blowup_threshold}};
    write_file(opt.out_dir / "sweep_summary.json", [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    log << "sweep: " << pts.size() << " points, " << failures.size() << " unresolved\n";
    return consistent ? exit_ok : exit_invariant;
  });
}

int cmd_refine(const CommandOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig cfg = require_config(opt);
    prepare_out_dir(opt.out_dir);
    const std::vector<RefineRow> rows = run_refine(cfg, opt.threads);
    write_file(opt.out_dir / "refine.csv", [&](std::ostream& os) { write_refine_csv(os, rows); });

    std::vector<const RefineRow*> ok;
    for (const auto& r : rows) {
      if (r.ok) ok.push_back(&r);
    }
    const AnalyticLabel label = analytic_label(cfg.model.alpha, cfg.model.beta);
    json contract = nullptr;
    bool pass = true;
    if (ok.size() >= 2 && label == AnalyticLabel::blowup) {
      bool monotone = true;
      for (std::size_t i = 1; i < ok.size(); ++i) monotone = monotone && ok[i]->peak_blowup_norm > ok[i - 1]->peak_blowup_norm;
      pass = monotone;
      contract = {{"kind", "growth"}, {"monotone", monotone}};
    } else if (ok.size() >= 2 && label == AnalyticLabel::global_regular) {
      double lo = ok.front()->peak_enstrophy, hi = lo;
      for (const auto* r : ok) {
        lo = std::min(lo, r->peak_enstrophy);
        hi = std::max(hi, r->peak_enstrophy);
      }
      const double spread = hi > 0.0 ? (hi - lo) / hi : 0.0;
      pass = spread <= 0.01;
      contract = {{"kind", "saturation"}, {"relative_spread", spread}};
    }
    json j = {{"command", "refine"},
              {"analytic_label", to_string(label)},
              {"rows", rows.size()},
              {"failed_rows", rows.size() - ok.size()},
              {"contract", contract},
              {"pass", pass}};
    write_file(opt.out_dir / "refine_summary.json", [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    log << "refine: " << rows.size() << " rows, contract " << (pass ? "pass" : "fail") << '\n';
    return pass ? exit_ok : exit_invariant;
  });
}

int cmd_attractor_probe(const CommandOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig cfg = require_config(opt);
    prepare_out_dir(opt.out_dir);
    const ProbeResult r = run_attractor_probe(cfg, opt.threads);
    write_file(opt.out_dir / "probe.csv", [&](std::ostream& os) {
      os << "burn_in,min_coordinate\n";
      for (const auto& l : r.levels) os << num(l.burn_in) << ',' << num(l.min_coordinate) << '\n';
    });
    json j = {{"command", "attractor-probe"}, {"seed", cfg.seed},           {"ensemble", cfg.probe.ensemble},
              {"support_bound", r.support_bound}, {"report", r.report},    {"stabilized", r.stabilized},
              {"failed_members", r.failed_members}};
    write_file(opt.out_dir / "probe_summary.json", [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    log << "attractor-probe: min coordinate " << num(r.report) << (r.stabilized ? " (stable)" : " (not stable)")
        << '\n';
    return r.failed_members == 0 ? exit_ok : exit_invariant;
  });
}

int cmd_euler(const CommandOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig cfg = require_config(opt);
    prepare_out_dir(opt.out_dir);
    const EulerReport r = run_euler(cfg);
    write_file(opt.out_dir / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, r.trajectory); });
    json j = {{"command", "euler"},
              {"params", params_json(cfg)},
              {"termination", to_string(r.trajectory.terminated)},
              {"energy_drift", r.energy_drift},
              {"monotonicity_violation", r.monotonicity_violation},
              {"monotonicity_budget", r.monotonicity_budget},
              {"min_coefficient", r.min_coefficient},
              {"mid_adjacent_product", r.mid_adjacent_product},
              {"late_adjacent_product", r.late_adjacent_product},
              {"verdict", r.passed() ? "pass" : "fail"}};
    write_file(opt.out_dir / "euler_summary.json", [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    log << "euler: drift " << num(r.energy_drift) << ", verdict " << (r.passed() ? "pass" : "fail") << '\n';
    return r.passed() ? exit_ok : exit_invariant;
  });
}

int cmd_examples(const CommandOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    prepare_out_dir(opt.out_dir);
    for (const ToyTable& t : run_toy_examples(opt.seed.value_or(0))) {
      write_file(opt.out_dir / ("toy_" + t.name + ".csv"), [&](std::ostream& os) { write_toy_csv(os, t); });
      log << "examples: wrote toy_" << t.name << ".csv\n";
    }
    return exit_ok;
  });
}

}  // namespace tns
