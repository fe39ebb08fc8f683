#include "tns/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tns {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0};
constexpr double kA[7][7] = {
    {0, 0, 0, 0, 0, 0, 0},
    {1.0 / 5.0, 0, 0, 0, 0, 0, 0},
    {3.0 / 40.0, 9.0 / 40.0, 0, 0, 0, 0, 0},
    {44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0, 0, 0, 0},
    {19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0, 0, 0},
    {9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0, 0},
    {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0}};
constexpr double kB[7] = {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0};
constexpr double kBhat[7] = {5179.0 / 57600.0,      0.0,          7571.0 / 16695.0, 393.0 / 640.0,
                             -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0};

constexpr std::size_t kCacheLimit = 256;

int intern(std::vector<double>& taus, double tau) {
  for (std::size_t k = 0; k < taus.size(); ++k) {
    if (std::abs(taus[k] - tau) < 1e-14) return static_cast<int>(k);
  }
  taus.push_back(tau);
  return static_cast<int>(taus.size() - 1);
}

// Step sizes proposed by the controller are rounded down to a ladder
// 2^(k/8) so the exponential tables can be reused across steps.
double ladder(double h) { return std::exp2(std::floor(std::log2(h) * 8.0) / 8.0); }

double scaled_error_norm(std::span<const double> u0, std::span<const double> u1, std::span<const double> err,
                         const IntegratorConfig& cfg) {
  double s = 0.0;
  for (std::size_t i = 0; i < u0.size(); ++i) {
    const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(u0[i]), std::abs(u1[i]));
    const double r = err[i] / sc;
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(u0.size()));
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw ModelError("integrator tolerances must be positive");
  if (!(dt_min > 0.0) || !(dt_min <= dt_init) || !(dt_init <= dt_max)) {
    throw ModelError("integrator requires 0 < dt_min <= dt_init <= dt_max");
  }
  if (!(sample_interval > 0.0)) throw ModelError("sample_interval must be positive");
  if (!(blowup_threshold > 0.0)) throw ModelError("blowup_threshold must be positive");
  if (max_steps == 0) throw ModelError("max_steps must be positive");
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::quasi_blowup: return "quasi_blowup";
    case Termination::step_underflow: return "step_underflow";
  }
  return "unknown";
}

IfDopriStepper::IfDopriStepper(const TnsModel& model, const Forcing& forcing)
    : model_(model), g_(forcing.data().begin(), forcing.data().end()), n_(model.size()) {
  if (forcing.size() != n_) throw ModelError("forcing length does not match model size");
  for (int i = 0; i < 7; ++i) {
    tau_c_[i] = intern(taus_, kC[i]);
    tau_end_[i] = intern(taus_, 1.0 - kC[i]);
    for (int j = 0; j < 7; ++j) tau_ij_[i][j] = j < i ? intern(taus_, kC[i] - kC[j]) : -1;
  }
  stages_.assign(7 * n_, 0.0);
  scratch_.assign(n_, 0.0);
}

void IfDopriStepper::nonlinear(std::span<const double> u, std::span<double> out) const {
  model_.nonlinear_rhs(u, g_, out);
}

const std::vector<double>& IfDopriStepper::factors(double h) {
  auto it = cache_.find(h);
  if (it != cache_.end()) return it->second;
  if (cache_.size() >= kCacheLimit) cache_.clear();
  const auto a = model_.a_weights();
  const double nu = model_.params().nu;
  std::vector<double> table(taus_.size() * n_);
  for (std::size_t k = 0; k < taus_.size(); ++k) {
    for (std::size_t i = 0; i < n_; ++i) table[k * n_ + i] = std::exp(-nu * a[i] * taus_[k] * h);
  }
  return cache_.emplace(h, std::move(table)).first->second;
}

bool IfDopriStepper::advance(std::span<const double> u0, std::span<const double> k1, double h,
                             std::span<double> u1, std::span<double> err, std::span<double> k7) {
  const std::vector<double>& f = factors(h);
  const std::size_t n = n_;
  auto stage = [&](int j) { return std::span<double>(stages_.data() + j * n, n); };
  std::copy(k1.begin(), k1.end(), stage(0).begin());

  for (int s = 1; s < 7; ++s) {
    const double* ec = f.data() + tau_c_[s] * n;
    for (std::size_t i = 0; i < n; ++i) scratch_[i] = ec[i] * u0[i];
    for (int j = 0; j < s; ++j) {
      if (kA[s][j] == 0.0) continue;
      const double w = h * kA[s][j];
      const double* e = f.data() + tau_ij_[s][j] * n;
      const double* kj = stages_.data() + j * n;
      for (std::size_t i = 0; i < n; ++i) scratch_[i] += w * e[i] * kj[i];
    }
    if (s == 6) std::copy(scratch_.begin(), scratch_.end(), u1.begin());
    nonlinear(scratch_, stage(s));
  }

  std::fill(err.begin(), err.end(), 0.0);
  for (int j = 0; j < 7; ++j) {
    const double w = h * (kBhat[j] - kB[j]);
    if (w == 0.0) continue;
    const double* e = f.data() + tau_end_[j] * n;
    const double* kj = stages_.data() + j * n;
    for (std::size_t i = 0; i < n; ++i) err[i] += w * e[i] * kj[i];
  }
  std::copy(stages_.begin() + 6 * n, stages_.begin() + 7 * n, k7.begin());

  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(u1[i]) || !std::isfinite(err[i]) || !std::isfinite(k7[i])) return false;
  }
  return true;
}

StepResult step(const StateVec& u, double dt, const TnsModel& model, const Forcing& g) {
  if (!(dt > 0.0)) throw ModelError("step size must be positive");
  if (u.size() != model.size()) throw ModelError("state length does not match model size");
  IfDopriStepper stepper(model, g);
  const std::size_t n = model.size();
  std::vector<double> k1(n), k7(n);
  stepper.nonlinear(u.data(), k1);
  StepResult r{StateVec(n), StateVec(n), 0.0};
  if (!stepper.advance(u.data(), k1, dt, r.state.data(), r.error.data(), k7)) {
    throw NumericalError("integrating-factor step produced a non-finite state");
  }
  r.error_estimate = std::sqrt(inner(r.error, r.error));
  return r;
}

namespace {

class SampleRecorder {
 public:
  SampleRecorder(Trajectory& traj, const TnsModel& model) : traj_(traj), model_(model) {}

  void record(double t, std::span<const double> u) {
    if (!traj_.times.empty() && !(t > traj_.times.back())) return;
    StateVec s(std::vector<double>(u.begin(), u.end()));
    traj_.diagnostics.push_back(model_.norms(s));
    traj_.times.push_back(t);
    traj_.states.push_back(std::move(s));
  }

 private:
  Trajectory& traj_;
  const TnsModel& model_;
};

}  // namespace

Trajectory integrate(const StateVec& u0, const ModelParams& params, const Forcing& g, double t_end,
                     const IntegratorConfig& cfg) {
  if (!(t_end > 0.0)) throw ModelError("t_end must be positive");
  cfg.validate();
  const TnsModel model(params);
  if (u0.size() != model.size()) throw ModelError("initial state length does not match n_modes");
  if (!u0.all_finite()) throw ModelError("initial state must be finite");

  Trajectory traj;
  traj.params = params;
  traj.forcing = g;
  traj.config = cfg;

  IfDopriStepper stepper(model, g);
  const std::size_t n = model.size();
  std::vector<double> u(u0.values()), trial(n), err(n), k1(n), k7(n);
  stepper.nonlinear(u, k1);

  SampleRecorder recorder(traj, model);
  recorder.record(0.0, u);
  traj.peak_blowup_norm = traj.diagnostics.front().blowup_norm;

  // Sample grid t_k = k * si; the last target is t_end itself.
  const double si = cfg.sample_interval;
  std::size_t next_k = 1;
  const double grid_eps = 1e-9 * si;
  auto target_time = [&](std::size_t k) {
    const double tk = static_cast<double>(k) * si;
    return tk > t_end - grid_eps ? t_end : tk;
  };

  double t = 0.0;
  double h = std::min(cfg.dt_init, cfg.dt_max);
  std::size_t attempts = 0;

  while (t < t_end) {
    if (++attempts > cfg.max_steps) {
      throw MaxStepsExceeded("integration exceeded max_steps=" + std::to_string(cfg.max_steps) + " at t=" +
                             std::to_string(t));
    }
    if (h < cfg.dt_min) {
      traj.terminated = Termination::step_underflow;
      traj.events.push_back({t, Termination::step_underflow});
      recorder.record(t, u);
      return traj;
    }
    const double target = target_time(next_k);

    const double proposal = ladder(h);
    double h_step = proposal;
    bool hits_target = false;
    if (t + 1.01 * h_step >= target) {
      h_step = target - t;
      hits_target = true;
    }

    const bool finite = stepper.advance(u, k1, h_step, trial, err, k7);
    const double err_norm = finite ? scaled_error_norm(u, trial, err, cfg) : std::numeric_limits<double>::infinity();

    if (!(err_norm <= 1.0)) {
      ++traj.rejected_steps;
      const double fac = std::isfinite(err_norm) ? std::max(0.2, 0.9 * std::pow(err_norm, -0.2)) : 0.2;
      h = std::min(h_step, proposal) * std::min(1.0, fac);
      continue;
    }

    ++traj.accepted_steps;
    t = hits_target ? target : t + h_step;
    u.swap(trial);
    k1.swap(k7);
    const double fac = err_norm > 0.0 ? std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0) : 5.0;
    // A shortened alignment step keeps the previous proposal.
    h = std::min(cfg.dt_max, h_step < proposal ? proposal : h_step * fac);

    double bsq = 0.0;
    const auto bw = model.blowup_weights();
    for (std::size_t i = 0; i < n; ++i) bsq += bw[i] * u[i] * u[i];
    const double bnorm = std::sqrt(bsq);
    traj.peak_blowup_norm = std::max(traj.peak_blowup_norm, bnorm);

    if (hits_target) {
      recorder.record(t, u);
      ++next_k;
    }
    if (bnorm > cfg.blowup_threshold) {
      traj.terminated = Termination::quasi_blowup;
      traj.events.push_back({t, Termination::quasi_blowup});
      recorder.record(t, u);
      return traj;
    }
  }
  return traj;
}

double check_positivity(const Trajectory& traj) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : traj.states) m = std::min(m, s.min_coeff());
  return traj.states.empty() ? 0.0 : m;
}

double positivity_tolerance(const Trajectory& traj) {
  double m = 0.0;
  for (const auto& s : traj.states) m = std::max(m, s.max_abs());
  return 1e-8 * m;
}

}  // namespace tns
