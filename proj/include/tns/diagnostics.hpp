#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <stdexcept>
#include <vector>

#include "tns/integrator.hpp"
#include "tns/model.hpp"

namespace tns {

class DiagnosticsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Cumulative trapezoid integral of f over the grid t (same length, result[0] = 0).
std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> f);

/// Error budget for the trapezoid rule applied to samples f(t):
/// sum over intervals of h^3 / 12 times the larger neighbouring
/// second-divided-difference estimate of |f''|, scaled by safety.
double trapezoid_budget(std::span<const double> t, std::span<const double> f, double safety = 4.0);

/// Signed balance R(t_k) = |u(t_k)|^2 - |u(0)|^2 + 2 nu int_0^t ||u||^2 - 2 int_0^t (g,u).
/// Zero for an exact truncated solution; trapezoid quadrature on the samples.
std::vector<double> energy_balance_series(const Trajectory& traj);

/// Largest positive value of |u(t)|^2 + 2nu int ||u||^2 - |u(t0)|^2 - 2 int (g,u)
/// over all sample pairs t0 <= t. Zero when no pair violates the inequality.
double energy_inequality_residual(const Trajectory& traj);

/// Tolerance for energy_inequality_residual: trapezoid budget of the
/// integrand 2nu||u||^2 - 2(g,u) plus an integrator term of
/// 10 rel_tol max|u|^2 per unit time.
double energy_balance_budget(const Trajectory& traj);

/// Per sample e^{-nu t}|u0|^2 + (|g|^2/nu^2)(1 - e^{-nu t}) - |u(t)|^2.
/// Throws DiagnosticsError when nu == 0.
std::vector<double> absorbing_ball_margin(const Trajectory& traj);

/// Time after which |u(t)| <= (1 + slack)|g|/nu is guaranteed by
/// d|u|/dt <= |g| - nu|u| (valid since n^alpha >= 1).
double absorb_time(double initial_energy_norm, double forcing_norm, double nu, double slack = 1e-3);

struct ThetaSeries {
  std::vector<double> times;
  std::vector<double> values;
  double gamma = 0.0;
  double window = 1.0;
};

/// Theta(t) = int_t^{t+1} ||u||_gamma^2 + 2gamma/(3+(3/2)^beta) int_t^{t+1} sum (n+1)^{gamma-1} u_n u_{n+1},
/// evaluated at every sample with t + 1 <= end. Requires at least 20 samples per unit window.
ThetaSeries theta(const Trajectory& traj, double gamma);

struct RiccatiFit {
  double c_estimate = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
  double residual = 0.0;           // rms of dTheta/dt - c Theta^{3/2}
  double relative_residual = 0.0;  // residual norm over derivative norm
  std::size_t samples_used = 0;
};

/// Least-squares c in dTheta/dt = c Theta^{3/2}, centered differences, restricted
/// to [window_start, window_end] (whole series by default) and Theta > 0.
RiccatiFit riccati_fit(const ThetaSeries& theta, std::optional<double> window_start = std::nullopt,
                       std::optional<double> window_end = std::nullopt);

/// Fit window [t_0, t_half] where t_half is the first time Theta completes
/// `fraction` of its rise from Theta(t_0) to its maximum. Throws
/// DiagnosticsError when Theta never rises.
std::pair<double, double> riccati_growth_window(const ThetaSeries& theta, double fraction = 0.5);

/// Lower bound on int_t^{t+1} (u_1^2 + u_2^2) for nonnegative solutions with
/// forcing g_1 e_1 plus nonnegative higher modes: the root X of
/// (1 + nu/2) sqrt(X) + 2^{beta-2} X = g_1 / 4.
double window_energy_lower_bound(double g1, double nu, double beta);

/// int_t^{t+1} |u|^2 by trapezoid; throws DiagnosticsError when t + 1 exceeds the trajectory.
double windowed_energy(const Trajectory& traj, double t);

/// max over t0 <= t of ||u(t0)||_gamma^2 - ||u(t)||_gamma^2 (zero if nondecreasing).
/// Inviscid runs only.
double euler_monotonicity(const Trajectory& traj, double gamma);

/// Tolerance for euler_monotonicity: 10 rel_tol max ||u||_gamma^2 per unit
/// time plus round-off.
double euler_monotonicity_budget(const Trajectory& traj, double gamma);

/// max_k ||u(t_k)|^2 - |u(0)|^2| / |u(0)|^2.
double relative_energy_drift(const Trajectory& traj);

/// max_n |u_n u_{n+1}| of one state.
double max_adjacent_product(const StateVec& u);

}  // namespace tns
