// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "tns/diagnostics.hpp"
#include "tns/experiments.hpp"
#include "tns/integrator.hpp"
#include "tns/model.hpp"
#include "tns/random.hpp"
#include "tns/toy_systems.hpp"

using namespace tns;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigDir = TNS_CONFIG_DIR;

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS " : "FAIL ") << id << ": " << detail << std::endl;
}

template <class Fn>
void criterion(const std::string& id, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

StateVec normal_state(Rng& rng, std::size_t n, double decay) {
  StateVec u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = standard_normal(rng) * std::pow(static_cast<double>(i + 1), -decay);
  return u;
}

// Sum of the magnitudes of the terms that cancel in (B(u,v),v).
double orthogonality_scale(const TnsModel& m, const StateVec& u, const StateVec& v) {
  const auto b = m.b_weights();
  double s = 0.0;
  for (std::size_t n = 1; n <= u.size(); ++n) {
    s += b[n - 1] * std::abs(u.mode(n - 1) * v.mode(n - 1) * v.mode(n));
    s += b[n] * std::abs(u.mode(n) * v.mode(n + 1) * v.mode(n));
  }
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// ---- criteria ----

void ac1() {
  Clock clock;
  Rng rng(101);
  const ModelParams points[] = {{2.0 / 3.0, 11.0 / 6.0, 1.0, 0.5, 0}, {1.0, 2.0, 1.0, 0.5, 0}, {2.0 / 3.0, 3.0, 1.0, 0.5, 0}};
  double worst = 0.0;
  std::size_t pairs = 0;
  for (const std::size_t n : {16u, 128u, 512u}) {
    for (int i = 0; i < 10000; ++i) {
      ModelParams p = points[i % 3];
      p.n_modes = n;
      const TnsModel m(p);
      const double decay = (i % 2 == 0) ? 0.0 : 1.5;
      const StateVec u = normal_state(rng, n, decay), v = normal_state(rng, n, decay);
      const double scale = orthogonality_scale(m, u, v);
      const double r = std::abs(inner(m.apply_B(u, v), v));
      worst = std::max(worst, scale > 0.0 ? r / scale : r);
      ++pairs;
    }
  }
  const double secs = clock.seconds();
  report("AC1 orthogonality", worst <= 1e-12 && secs < 5.0,
         fmt::format("{} pairs, worst |(B(u,v),v)|/scale {:.3e} <= 1e-12, {:.2f} s < 5 s", pairs, worst, secs));
}

void ac2() {
  struct Point {
    double alpha, beta, oracle;
  };
  const Point points[] = {{2.0 / 3.0, 11.0 / 6.0, 0.237688}, {1.0, 2.0, 0.238118}, {0.5, 1.75, 0.237832}};
  Rng rng(202);
  double worst = 0.0, worst_sharp = std::numeric_limits<double>::infinity();
  for (const Point& pt : points) {
    const ModelParams p{pt.alpha, pt.beta, 1.0, 0.5, 64};
    const TnsModel m(p);
    for (int i = 0; i < 10000; ++i) {
      StateVec u;
      switch (i % 3) {
        case 0: u = normal_state(rng, 64, 0.0); break;
        case 1: u = normal_state(rng, 64, 1.0 + 2.0 * uniform01(rng)); break;
        default: u = StateVec(ball_sample(rng, 64, 1.0, true)); break;
      }
      worst = std::max(worst, m.sharp_estimate_ratio(u));
    }
    const SharpnessSearch s = two_mode_sharpness(p);
    worst_sharp = std::min(worst_sharp, s.sup_ratio / pt.oracle);
  }
  report("AC2 sharp estimate", worst <= 1.0 + 1e-10 && worst_sharp >= 0.95,
         fmt::format("worst random ratio {:.6f} <= 1 + 1e-10; two-mode sup / oracle min {:.6f} >= 0.95", worst,
                     worst_sharp));
}

void ac3() {
  const auto [p, q] = sharp_estimate_exponents(Rational(2, 3), Rational(11, 6));
  const bool pass = p == Rational(3, 2) && q == Rational(3, 2);
  report("AC3 exponents at (2/3, 11/6)", pass,
         fmt::format("p = {}/{}, q = {}/{} (expected 3/2, 3/2 exactly)", p.numerator(), p.denominator(),
                     q.numerator(), q.denominator()));
}

struct RandomRun {
  Trajectory traj;
  StateVec u0;
};

// Twenty viscous nonnegative runs to t = 10; every fourth sits in the blow-up regime.
std::vector<RandomRun> random_viscous_runs(double* seconds) {
  Clock clock;
  Rng rng(404);
  std::vector<RandomRun> runs;
  for (int i = 0; i < 20; ++i) {
    ModelParams p;
    if (i % 4 == 0) {
      p = {2.0 / 3.0, 3.0, 1.0, 0.5, 32};
    } else {
      p.alpha = uniform(rng, 0.5, 1.5);
      p.beta = uniform(rng, 1.2, 3.2);
      p.nu = uniform(rng, 0.5, 2.0);
      p.gamma = 0.5;
      p.n_modes = 32;
    }
    const Forcing g = Forcing::single_mode(p.n_modes, uniform(rng, 1.0, 10.0));
    const StateVec u0(ball_sample(rng, p.n_modes, uniform(rng, 0.5, 5.0), true));
    runs.push_back({integrate(u0, p, g, 10.0, {}), u0});
  }
  *seconds = clock.seconds();
  return runs;
}

void ac4(const std::vector<RandomRun>& runs, double seconds) {
  double worst = -std::numeric_limits<double>::infinity();
  bool pass = true;
  for (const auto& r : runs) {
    const double res = energy_inequality_residual(r.traj), budget = energy_balance_budget(r.traj);
    pass = pass && r.traj.terminated == Termination::completed && res <= budget;
    worst = std::max(worst, res - budget);
  }
  report("AC4 energy inequality", pass && seconds < 60.0,
         fmt::format("{} runs, max(residual - budget) {:.3e} <= 0, {:.1f} s < 60 s", runs.size(), worst, seconds));
}

void ac5(const std::vector<RandomRun>& runs) {
  double worst = std::numeric_limits<double>::infinity();
  bool pass = true;
  std::size_t blowup_runs = 0;
  for (const auto& r : runs) {
    const double m = check_positivity(r.traj);
    pass = pass && m >= -positivity_tolerance(r.traj);
    worst = std::min(worst, m);
    if (r.traj.params.blowup_regime()) ++blowup_runs;
  }
  report("AC5 positivity", pass && blowup_runs > 0,
         fmt::format("{} runs ({} blow-up regime), min coefficient {:.3e} >= -1e-8 max|u|", runs.size(), blowup_runs,
                     worst));
}

void ac6(const std::vector<RandomRun>& runs) {
  bool pass = true;
  double worst_margin = std::numeric_limits<double>::infinity(), worst_ratio = 0.0;
  std::size_t checked = 0;
  for (const auto& r : runs) {
    const double budget = energy_balance_budget(r.traj);
    for (const double m : absorbing_ball_margin(r.traj)) {
      pass = pass && m >= -budget;
      worst_margin = std::min(worst_margin, m + budget);
    }
    const double radius = r.traj.forcing.norm() / r.traj.params.nu;
    const double ta = absorb_time(std::sqrt(inner(r.u0, r.u0)), r.traj.forcing.norm(), r.traj.params.nu);
    for (std::size_t k = 0; k < r.traj.size(); ++k) {
      if (r.traj.times[k] < ta) continue;
      ++checked;
      const double ratio = r.traj.diagnostics[k].energy / radius;
      pass = pass && ratio <= 1.001;
      worst_ratio = std::max(worst_ratio, ratio);
    }
  }
  report("AC6 absorbing ball", pass && checked > 0,
         fmt::format("min(margin + budget) {:.3e} >= 0; max |u|/(|g|/nu) after absorb time {:.6f} <= 1.001 "
                     "over {} samples",
                     worst_margin, worst_ratio, checked));
}

void ac7() {
  Clock clock;
  const RunConfig regular = load_config(kConfigDir / "refine_regular.json");
  const auto reg_rows = run_refine(regular, 1);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  bool reg_ok = true;
  for (const auto& r : reg_rows) {
    reg_ok = reg_ok && r.ok;
    lo = std::min(lo, r.peak_enstrophy);
    hi = std::max(hi, r.peak_enstrophy);
  }
  const double spread = (hi - lo) / hi;
  const bool reg_pass = reg_ok && spread <= 0.01;

  const RunConfig blow = load_config(kConfigDir / "refine_blowup.json");
  const auto blow_rows = run_refine(blow, 1);
  double min_growth = std::numeric_limits<double>::infinity();
  std::string growths;
  bool blow_ok = true;
  for (const auto& r : blow_rows) {
    blow_ok = blow_ok && r.ok;
    if (r.growth_ratio) {
      min_growth = std::min(min_growth, *r.growth_ratio);
      growths += fmt::format("{}{:.3f}", growths.empty() ? "" : ", ", *r.growth_ratio);
    }
  }
  const bool growth_pass = blow_ok && min_growth >= 2.0;

  // Riccati fit on the finest blow-up run integrated over the whole horizon.
  ModelParams p = blow.model;
  p.n_modes = blow.refine.n_values.back();
  IntegratorConfig ic = blow.integrator;
  ic.blowup_threshold = std::numeric_limits<double>::infinity();
  Rng rng(blow.seed);
  const Forcing g = blow.g.build(p.n_modes);
  const Trajectory traj = integrate(blow.u0.build(p.n_modes, default_radius(p, g), rng), p, g, blow.t_end, ic);
  std::string why;
  const auto fit = growth_fit(traj, p.gamma, &why);
  const bool fit_pass = fit && fit->c_estimate > 0.0 && fit->relative_residual <= 0.10;
  const std::string fit_text = fit ? fmt::format("c {:.4f} > 0, residual {:.4f} <= 0.10", fit->c_estimate,
                                                 fit->relative_residual)
                                   : "no fit: " + why;
  const double secs = clock.seconds();
  report("AC7 regularity dichotomy", reg_pass && growth_pass && fit_pass && secs < 600.0,
         fmt::format("regular peak-enstrophy spread {:.3e} <= 0.01 [{}]; blow-up growth per doubling {} >= 2 [{}]; "
                     "Riccati {} [{}]; {:.1f} s < 600 s",
                     spread, reg_pass ? "ok" : "fail", growths, growth_pass ? "ok" : "fail", fit_text,
                     fit_pass ? "ok" : "fail", secs));
}

void ac8() {
  Clock clock;
  const EulerReport r = run_euler(load_config(kConfigDir / "euler.json"));
  const double secs = clock.seconds();
  const bool pass = r.energy_drift <= 1e-9 && r.monotonicity_violation <= r.monotonicity_budget && secs < 60.0;
  report("AC8 inviscid properties", pass,
         fmt::format("relative energy drift {:.3e} <= 1e-9; gamma-norm decrease {:.3e} <= budget {:.3e}; "
                     "{:.1f} s < 60 s",
                     r.energy_drift, r.monotonicity_violation, r.monotonicity_budget, secs));
}

void ac9() {
  double worst = 0.0;
  for (const double c : {0.1, 0.5, 2.0}) {
    ThetaSeries th;
    const double theta0 = 1.0, tb = 2.0 / (c * std::sqrt(theta0));
    for (int k = 0; k <= 400; ++k) {
      const double t = 0.9 * tb * k / 400.0;
      th.times.push_back(t);
      th.values.push_back(std::pow(1.0 / std::sqrt(theta0) - 0.5 * c * t, -2.0));
    }
    worst = std::max(worst, std::abs(riccati_fit(th).c_estimate - c) / c);
  }
  report("AC9 Riccati oracle", worst <= 0.01, fmt::format("worst relative error in c {:.3e} <= 0.01", worst));
}

void ac10() {
  using namespace evolution;
  std::vector<std::string> failed;

  const ToySystem decay = ToySystem::mode_decay(256);
  std::vector<ToyState> ens = unit_basis_ensemble(decay, decay.size);
  for (auto& u : random_ball_ensemble(decay, 32, 0)) ens.push_back(std::move(u));
  const ToyState zero(decay.size, 0.0);
  double min_norm = std::numeric_limits<double>::infinity();
  for (const auto& u : ens) min_norm = std::min(min_norm, d_s(u, zero));
  const BoxSet origin = BoxSet::origin(decay.size);
  const double horizon = mode_decay_weak_horizon(decay.size, 1e-3);
  double weak_at_horizon = 0.0;
  for (const double t : {horizon, 1.5 * horizon, 2.0 * horizon}) {
    weak_at_horizon = std::max(weak_at_horizon, attraction_radius(decay, origin, t, MetricKind::weak, ens));
  }
  if (!(weak_at_horizon < 1e-3)) failed.push_back("mode_decay weak radius");
  double strong_floor = std::numeric_limits<double>::infinity();
  for (const double t : {0.0, 1.0, 5.0, 20.0, 50.0, 100.0, 200.0, 256.0}) {
    strong_floor = std::min(strong_floor, attraction_radius(decay, origin, t, MetricKind::strong, ens));
  }
  if (!(strong_floor >= std::exp(-1.0) * min_norm)) failed.push_back("mode_decay strong radius");

  const ToySystem frozen = ToySystem::frozen_first(64);
  std::vector<ToyState> ens2 = unit_basis_ensemble(frozen, frozen.size);
  for (auto& u : random_ball_ensemble(frozen, 32, 0)) ens2.push_back(std::move(u));
  const BoxSet interval = BoxSet::first_mode_interval(frozen.size);
  double frozen_ratio = 0.0;
  for (const double t : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 10.0}) {
    const double r = attraction_radius(frozen, interval, t, MetricKind::strong, ens2);
    frozen_ratio = std::max(frozen_ratio, r / (std::exp(-t) * std::sqrt(64.0)));
  }
  if (!(frozen_ratio <= 1.0)) failed.push_back("frozen_first strong radius");

  // Metric axioms on random triples, both representations and both metrics.
  Rng rng(1010);
  double worst_axiom = 0.0;
  const ToySystem shift_small = ToySystem::shift(256, 16.0);
  for (const ToySystem& sys : {decay, shift_small}) {
    const MetricPair m(sys);
    for (const MetricKind kind : {MetricKind::strong, MetricKind::weak}) {
      for (int i = 0; i < 1000; ++i) {
        ToyState u(sys.size), v(sys.size), w(sys.size);
        for (std::size_t k = 0; k < sys.size; ++k) {
          u[k] = standard_normal(rng);
          v[k] = standard_normal(rng);
          w[k] = standard_normal(rng);
        }
        const double uv = m.distance(kind, u, v);
        worst_axiom = std::max(worst_axiom, std::abs(m.distance(kind, u, u)));
        worst_axiom = std::max(worst_axiom, std::abs(uv - m.distance(kind, v, u)));
        worst_axiom = std::max(worst_axiom, uv - m.distance(kind, u, w) - m.distance(kind, w, v));
        if (!(uv > 0.0)) worst_axiom = std::max(worst_axiom, 1.0);
      }
    }
  }
  if (!(worst_axiom <= 1e-12)) failed.push_back("metric axioms");

  double worst_semigroup = 0.0;
  for (const ToySystem& sys : {ToySystem::mode_decay(64), ToySystem::frozen_first(64)}) {
    for (int i = 0; i < 1000; ++i) {
      ToyState u(sys.size);
      for (auto& x : u) x = standard_normal(rng);
      const double s = 5.0 * uniform01(rng), t = 5.0 * uniform01(rng);
      const ToyState a = flow(sys, s + t, u), b = flow(sys, t, flow(sys, s, u));
      worst_semigroup = std::max(worst_semigroup, d_s(a, b) / (1.0 + d_s(u, ToyState(sys.size, 0.0))));
    }
  }
  const ToySystem shift = ToySystem::shift();
  const auto bumps = shift_bump_ensemble(shift, 16, 0);
  for (int i = 0; i < 16; ++i) {
    const double s = std::floor(8.0 * uniform01(rng)), t = std::floor(8.0 * uniform01(rng));
    const auto& u = bumps[static_cast<std::size_t>(i)];
    worst_semigroup = std::max(worst_semigroup, d_s(flow(shift, s + t, u), flow(shift, t, flow(shift, s, u))));
  }
  if (!(worst_semigroup <= 1e-12)) failed.push_back("semigroup law");

  std::string what;
  for (const auto& f : failed) what += (what.empty() ? "" : ", ") + f;
  report("AC10 toy systems", failed.empty(),
         fmt::format("mode_decay weak radius {:.3e} < 1e-3 from horizon {:.2f}; strong radius min {:.4f} >= "
                     "e^-1 * {:.4f}; frozen_first radius / (e^-t sqrt N) max {:.4f} <= 1; axiom defect {:.1e}; "
                     "semigroup defect {:.1e}{}",
                     weak_at_horizon, horizon, strong_floor, min_norm, frozen_ratio, worst_axiom, worst_semigroup,
                     what.empty() ? "" : "; failing: " + what));
}

void ac11() {
  const fs::path base = fs::temp_directory_path() / "tns_lab_acceptance";
  fs::remove_all(base);
  std::ostringstream log;
  bool pass = true;
  std::string detail;
  auto run_twice = [&](const std::string& name, const std::string& config, const std::string& csv,
                       int (*cmd)(const CommandOptions&, std::ostream&), unsigned threads_second) {
    CommandOptions a, b;
    a.config = b.config = kConfigDir / config;
    a.out_dir = base / (name + "_a");
    b.out_dir = base / (name + "_b");
    b.threads = threads_second;
    const int ca = cmd(a, log), cb = cmd(b, log);
    const std::string sa = slurp(a.out_dir / csv), sb = slurp(b.out_dir / csv);
    const bool same = ca == exit_ok && cb == exit_ok && !sa.empty() && sa == sb;
    pass = pass && same;
    detail += fmt::format("{}{} {} bytes {}", detail.empty() ? "" : "; ", csv, sa.size(), same ? "identical" : "DIFFER");
  };
  run_twice("simulate", "simulate_3d.json", "trajectory.csv", &cmd_simulate, 1);
  run_twice("sweep", "sweep_small.json", "sweep.csv", &cmd_sweep, 2);
  fs::remove_all(base);
  report("AC11 determinism", pass, detail);
}

}  // namespace

int main() {
  Clock total;
  criterion("AC1 orthogonality", ac1);
  criterion("AC2 sharp estimate", ac2);
  criterion("AC3 exponents at (2/3, 11/6)", ac3);
  double run_seconds = 0.0;
  std::vector<RandomRun> runs;
  try {
    runs = random_viscous_runs(&run_seconds);
  } catch (const std::exception& e) {
    std::cout << "note: random viscous runs failed: " << e.what() << std::endl;
  }
  criterion("AC4 energy inequality", [&] {
    if (runs.empty()) throw std::runtime_error("no runs");
    ac4(runs, run_seconds);
  });
  criterion("AC5 positivity", [&] {
    if (runs.empty()) throw std::runtime_error("no runs");
    ac5(runs);
  });
  criterion("AC6 absorbing ball", [&] {
    if (runs.empty()) throw std::runtime_error("no runs");
    ac6(runs);
  });
  criterion("AC7 regularity dichotomy", ac7);
  criterion("AC8 inviscid properties", ac8);
  criterion("AC9 Riccati oracle", ac9);
  criterion("AC10 toy systems", ac10);
  criterion("AC11 determinism", ac11);
  std::cout << fmt::format("{} criteria failed, {:.1f} s total", failures, total.seconds()) << std::endl;
  return failures == 0 ? 0 : 1;
}
