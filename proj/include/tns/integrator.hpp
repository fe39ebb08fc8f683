#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tns/model.hpp"

namespace tns {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MaxStepsExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IntegratorConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  double dt_init = 1e-3;
  double dt_min = 1e-14;
  double dt_max = 0.1;
  double sample_interval = 1e-2;
  double blowup_threshold = 1e6;
  std::size_t max_steps = 50'000'000;

  void validate() const;
};

enum class Termination { completed, quasi_blowup, step_underflow };

const char* to_string(Termination t);

struct TrajectoryEvent {
  double time = 0.0;
  Termination kind = Termination::quasi_blowup;
};

/// Sampled solution of one integration run.
///
/// times[k] = k * sample_interval for the regular samples; an early
/// termination appends one final off-grid sample at the termination time.
struct Trajectory {
  ModelParams params;
  Forcing forcing;
  IntegratorConfig config;
  std::vector<double> times;
  std::vector<StateVec> states;
  std::vector<NormReport> diagnostics;
  std::vector<TrajectoryEvent> events;
  Termination terminated = Termination::completed;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  double peak_blowup_norm = 0.0;  // over accepted steps, not only samples

  std::size_t size() const { return times.size(); }
  double end_time() const { return times.empty() ? 0.0 : times.back(); }
};

struct StepResult {
  StateVec state;
  StateVec error;               // embedded (order 4) minus order 5 solution
  double error_estimate = 0.0;  // l2 norm of error
};

/// Integrating-factor Dormand-Prince 5(4) stepper for du/dt = -nu A u + N(u),
/// N(u) = g - B(u,u). The diagonal part is propagated by exp(-nu n^alpha t);
/// the Runge-Kutta stages act on the interaction-picture variable.
class IfDopriStepper {
 public:
  IfDopriStepper(const TnsModel& model, const Forcing& forcing);

  /// One step of size h. k1 must hold N(u0); on return k7 holds N(u1)
  /// (first-same-as-last). Returns false when a non-finite value appears.
  bool advance(std::span<const double> u0, std::span<const double> k1, double h, std::span<double> u1,
               std::span<double> err, std::span<double> k7);

  void nonlinear(std::span<const double> u, std::span<double> out) const;

  std::size_t size() const { return n_; }

 private:
  const std::vector<double>& factors(double h);

  const TnsModel& model_;
  std::vector<double> g_;
  std::size_t n_;
  // Distinct offsets tau with exp(-lambda tau h) needed by the tableau.
  std::vector<double> taus_;
  int tau_c_[7];         // index of c_i
  int tau_ij_[7][7];     // index of c_i - c_j
  int tau_end_[7];       // index of 1 - c_j
  std::map<double, std::vector<double>> cache_;
  std::vector<double> stages_;  // 7 x n
  std::vector<double> scratch_;
};

/// Single integrating-factor DP5(4) step from u. Throws NumericalError when
/// the step produces a non-finite state.
StepResult step(const StateVec& u, double dt, const TnsModel& model, const Forcing& g);

/// Adaptive integration on [0, t_end]. Steps are aligned to the sample grid
/// so every stored sample is an accepted integrator state. Throws
/// MaxStepsExceeded when the attempted-step budget is exhausted.
Trajectory integrate(const StateVec& u0, const ModelParams& params, const Forcing& g, double t_end,
                     const IntegratorConfig& cfg);

/// Smallest coefficient over all samples and modes.
double check_positivity(const Trajectory& traj);

/// 1e-8 times the largest coefficient magnitude seen in the trajectory.
double positivity_tolerance(const Trajectory& traj);

}  // namespace tns
