#include "tns/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tns {

namespace {

constexpr double kWindow = 1.0;
constexpr double kTimeEps = 1e-9;

double energy_sq(const StateVec& u) { return inner(u, u); }

double gamma_sq(const StateVec& u, std::span<const double> w) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += w[i] * u[i] * u[i];
  return s;
}

// Integral of the piecewise-linear interpolant of f from t[0] to x.
double interpolated_integral(std::span<const double> t, std::span<const double> f, std::span<const double> cum,
                             double x) {
  if (x <= t.front()) return 0.0;
  if (x >= t.back()) return cum.back();
  const auto it = std::upper_bound(t.begin(), t.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - t.begin()) - 1;
  const double h = t[j + 1] - t[j];
  const double fx = f[j] + (f[j + 1] - f[j]) * (x - t[j]) / h;
  return cum[j] + 0.5 * (f[j] + fx) * (x - t[j]);
}

void require_samples(const Trajectory& traj) {
  if (traj.times.empty()) throw DiagnosticsError("trajectory has no samples");
}

}  // namespace

std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> f) {
  if (t.size() != f.size()) throw DiagnosticsError("time and value series differ in length");
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t k = 1; k < t.size(); ++k) out[k] = out[k - 1] + 0.5 * (t[k] - t[k - 1]) * (f[k] + f[k - 1]);
  return out;
}

double trapezoid_budget(std::span<const double> t, std::span<const double> f, double safety) {
  const std::size_t m = t.size();
  if (m < 3) return 0.0;
  std::vector<double> curv(m, 0.0);
  for (std::size_t k = 1; k + 1 < m; ++k) {
    const double h0 = t[k] - t[k - 1];
    const double h1 = t[k + 1] - t[k];
    curv[k] = std::abs(2.0 * ((f[k + 1] - f[k]) / h1 - (f[k] - f[k - 1]) / h0) / (h0 + h1));
  }
  curv[0] = curv[1];
  curv[m - 1] = curv[m - 2];
  double budget = 0.0;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const double h = t[k + 1] - t[k];
    budget += h * h * h / 12.0 * std::max(curv[k], curv[k + 1]);
  }
  return safety * budget;
}

namespace {

// 2 nu ||u||^2 - 2 (g, u) at every sample.
std::vector<double> balance_integrand(const Trajectory& traj) {
  const TnsModel model(traj.params);
  const auto aw = model.a_weights();
  std::vector<double> f(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const StateVec& u = traj.states[k];
    f[k] = 2.0 * traj.params.nu * gamma_sq(u, aw) - 2.0 * inner(traj.forcing.data(), u.data());
  }
  return f;
}

}  // namespace

std::vector<double> energy_balance_series(const Trajectory& traj) {
  require_samples(traj);
  const std::vector<double> f = balance_integrand(traj);
  const std::vector<double> cum = cumulative_trapezoid(traj.times, f);
  const double e0 = energy_sq(traj.states.front());
  std::vector<double> r(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) r[k] = energy_sq(traj.states[k]) - e0 + cum[k];
  return r;
}

double energy_inequality_residual(const Trajectory& traj) {
  if (traj.times.empty()) return 0.0;
  // The pair residual is R(t) - R(t0); its maximum over t0 <= t is a running-min scan.
  const std::vector<double> r = energy_balance_series(traj);
  double running_min = r.front();
  double worst = 0.0;
  for (double v : r) {
    running_min = std::min(running_min, v);
    worst = std::max(worst, v - running_min);
  }
  return worst;
}

double energy_balance_budget(const Trajectory& traj) {
  if (traj.size() < 2) return 0.0;
  const std::vector<double> f = balance_integrand(traj);
  double max_e = 0.0;
  for (const auto& d : traj.diagnostics) max_e = std::max(max_e, d.energy * d.energy);
  const double span = traj.times.back() - traj.times.front();
  const double integrator_term = 10.0 * traj.config.rel_tol * max_e * (1.0 + span);
  const double roundoff = 1e-13 * max_e * static_cast<double>(traj.size());
  return trapezoid_budget(traj.times, f) + integrator_term + roundoff;
}

std::vector<double> absorbing_ball_margin(const Trajectory& traj) {
  const double nu = traj.params.nu;
  if (!(nu > 0.0)) throw DiagnosticsError("absorbing ball requires nu > 0");
  require_samples(traj);
  const double e0 = energy_sq(traj.states.front());
  const double g2 = inner(traj.forcing.data(), traj.forcing.data());
  std::vector<double> margin(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double decay = std::exp(-nu * traj.times[k]);
    margin[k] = decay * e0 + g2 / (nu * nu) * (1.0 - decay) - energy_sq(traj.states[k]);
  }
  return margin;
}

double absorb_time(double initial_energy_norm, double forcing_norm, double nu, double slack) {
  if (!(nu > 0.0)) throw DiagnosticsError("absorb time requires nu > 0");
  const double radius = forcing_norm / nu;
  const double excess = initial_energy_norm - radius;
  if (excess <= slack * radius) return 0.0;
  if (radius == 0.0) return std::numeric_limits<double>::infinity();
  return std::log(excess / (slack * radius)) / nu;
}

ThetaSeries theta(const Trajectory& traj, double gamma) {
  require_samples(traj);
  if (!(gamma > 0.0)) throw DiagnosticsError("theta requires gamma > 0");
  const double t0 = traj.times.front();
  const double t_end = traj.times.back();
  if (t_end - t0 < kWindow - kTimeEps) throw DiagnosticsError("trajectory shorter than the unit window");
  const double max_spacing = kWindow / 20.0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    if (traj.times[k] - traj.times[k - 1] > max_spacing * (1.0 + 1e-9)) {
      throw DiagnosticsError("sample grid too coarse for theta (need 20 samples per unit window)");
    }
  }

  const std::size_t n = traj.params.n_modes;
  const std::vector<double> gw = index_powers(n, gamma);
  // (n+1)^{gamma-1} for n = 1..N-1 (entry i multiplies u_{i+1} u_{i+2}).
  std::vector<double> cross_w(n > 0 ? n - 1 : 0);
  for (std::size_t i = 0; i + 1 < n; ++i) cross_w[i] = std::pow(static_cast<double>(i + 2), gamma - 1.0);
  const double kappa = 2.0 * gamma / (3.0 + std::pow(1.5, traj.params.beta));

  std::vector<double> f(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const StateVec& u = traj.states[k];
    double cross = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) cross += cross_w[i] * u[i] * u[i + 1];
    f[k] = gamma_sq(u, gw) + kappa * cross;
  }
  const std::vector<double> cum = cumulative_trapezoid(traj.times, f);

  ThetaSeries out;
  out.gamma = gamma;
  out.window = kWindow;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    if (t + kWindow > t_end + kTimeEps) break;
    const double upper = std::min(t + kWindow, t_end);
    out.times.push_back(t);
    out.values.push_back(interpolated_integral(traj.times, f, cum, upper) - cum[k]);
  }
  return out;
}

RiccatiFit riccati_fit(const ThetaSeries& th, std::optional<double> window_start, std::optional<double> window_end) {
  const auto& t = th.times;
  const auto& v = th.values;
  if (t.size() != v.size()) throw DiagnosticsError("theta series is malformed");
  const double lo = window_start.value_or(t.empty() ? 0.0 : t.front());
  const double hi = window_end.value_or(t.empty() ? 0.0 : t.back());
  if (!(lo < hi)) throw DiagnosticsError("riccati fit window is empty");

  std::vector<double> d, x;
  double first = 0.0, last = 0.0;
  for (std::size_t k = 1; k + 1 < t.size(); ++k) {
    if (t[k] < lo - kTimeEps || t[k] > hi + kTimeEps) continue;
    if (!(v[k - 1] > 0.0 && v[k] > 0.0 && v[k + 1] > 0.0)) continue;
    const double h0 = t[k] - t[k - 1];
    const double h1 = t[k + 1] - t[k];
    // Three-point centered derivative on a possibly nonuniform grid.
    const double deriv = -h1 / (h0 * (h0 + h1)) * v[k - 1] + (h1 - h0) / (h0 * h1) * v[k] + h0 / (h1 * (h0 + h1)) * v[k + 1];
    if (d.empty()) first = t[k];
    last = t[k];
    d.push_back(deriv);
    x.push_back(std::pow(v[k], 1.5));
  }
  if (d.size() < 5) throw DiagnosticsError("riccati fit needs at least 5 usable samples");

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    sxy += x[i] * d[i];
    sxx += x[i] * x[i];
    syy += d[i] * d[i];
  }
  RiccatiFit fit;
  fit.c_estimate = sxx > 0.0 ? sxy / sxx : 0.0;
  double sres = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = d[i] - fit.c_estimate * x[i];
    sres += r * r;
  }
  fit.window_start = first;
  fit.window_end = last;
  fit.samples_used = d.size();
  fit.residual = std::sqrt(sres / static_cast<double>(d.size()));
  fit.relative_residual = syy > 0.0 ? std::sqrt(sres / syy) : 0.0;
  return fit;
}

std::pair<double, double> riccati_growth_window(const ThetaSeries& th, double fraction) {
  if (th.values.empty()) throw DiagnosticsError("theta series is empty");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DiagnosticsError("rise fraction must lie in (0, 1]");
  const auto& v = th.values;
  const double v0 = v.front();
  const double vmax = *std::max_element(v.begin(), v.end());
  if (!(vmax > v0)) throw DiagnosticsError("theta does not rise");
  const double level = v0 + fraction * (vmax - v0);
  std::size_t k = 0;
  while (v[k] < level) ++k;
  return {th.times.front(), th.times[k]};
}

double window_energy_lower_bound(double g1, double nu, double beta) {
  if (!(g1 >= 0.0) || !(nu >= 0.0)) throw DiagnosticsError("window energy bound needs g1 >= 0 and nu >= 0");
  const double a = std::exp2(beta - 2.0);
  const double b = 1.0 + 0.5 * nu;
  const double c = 0.25 * g1;
  // Positive root of a y^2 + b y - c = 0 in y = sqrt(X), written without cancellation.
  const double y = 2.0 * c / (b + std::sqrt(b * b + 4.0 * a * c));
  return y * y;
}

double windowed_energy(const Trajectory& traj, double t) {
  require_samples(traj);
  if (t < traj.times.front() - kTimeEps || t + kWindow > traj.times.back() + kTimeEps) {
    throw DiagnosticsError("window [t, t+1] is outside the trajectory");
  }
  std::vector<double> f(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) f[k] = energy_sq(traj.states[k]);
  const std::vector<double> cum = cumulative_trapezoid(traj.times, f);
  const double upper = std::min(t + kWindow, traj.times.back());
  return interpolated_integral(traj.times, f, cum, upper) - interpolated_integral(traj.times, f, cum, t);
}

double euler_monotonicity(const Trajectory& traj, double gamma) {
  if (traj.params.nu != 0.0) throw DiagnosticsError("euler monotonicity applies to inviscid runs only");
  if (traj.times.empty()) return 0.0;
  const std::vector<double> w = index_powers(traj.params.n_modes, gamma);
  double running_max = -std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (const auto& u : traj.states) {
    const double g2 = gamma_sq(u, w);
    running_max = std::max(running_max, g2);
    worst = std::max(worst, running_max - g2);
  }
  return worst;
}

double euler_monotonicity_budget(const Trajectory& traj, double gamma) {
  if (traj.times.empty()) return 0.0;
  const std::vector<double> w = index_powers(traj.params.n_modes, gamma);
  double max_g = 0.0;
  for (const auto& u : traj.states) max_g = std::max(max_g, gamma_sq(u, w));
  const double span = traj.times.back() - traj.times.front();
  return 10.0 * traj.config.rel_tol * max_g * (1.0 + span) + 1e-13 * max_g * static_cast<double>(traj.size());
}

double relative_energy_drift(const Trajectory& traj) {
  require_samples(traj);
  const double e0 = energy_sq(traj.states.front());
  if (e0 == 0.0) return 0.0;
  double worst = 0.0;
  for (const auto& u : traj.states) worst = std::max(worst, std::abs(energy_sq(u) - e0) / e0);
  return worst;
}

double max_adjacent_product(const StateVec& u) {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) m = std::max(m, std::abs(u[i] * u[i + 1]));
  return m;
}

}  // namespace tns
