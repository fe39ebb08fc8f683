#pragma once

// Closed-form evolutionary systems on a weak/strong metric pair: the
// translation flow on L^2(-inf, 0], the l^2 decay u_n' = -u_n / n, and the
// system that freezes u_1 while the other modes decay at unit rate.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace tns::evolution {

using ToyState = std::vector<double>;

enum class ToyKind { shift, mode_decay, frozen_first };
enum class MetricKind { strong, weak };

const char* to_string(ToyKind kind);

/// State space description. Sequence systems hold modes 1..size; the shift
/// system holds grid values at x_k = -(size - 1 - k) dx, k = 0..size-1, with
/// dx = domain_length / size, so the last node is x = 0.
struct ToySystem {
  ToyKind kind = ToyKind::mode_decay;
  std::size_t size = 64;
  double domain_length = 64.0;

  static ToySystem shift(std::size_t points = std::size_t{1} << 14, double domain_length = 64.0);
  static ToySystem mode_decay(std::size_t modes);
  static ToySystem frozen_first(std::size_t modes);

  bool is_grid() const { return kind == ToyKind::shift; }
  double dx() const { return domain_length / static_cast<double>(size); }
  double node(std::size_t k) const { return -static_cast<double>(size - 1 - k) * dx(); }
};

/// d_w on truncated sequences: sum_n 2^{-n} |u_n - v_n| / (1 + |u_n - v_n|).
/// The omitted tail is at most 2^{-N}.
double d_w(std::span<const double> u, std::span<const double> v);
/// l^2 distance.
double d_s(std::span<const double> u, std::span<const double> v);

/// Strong and weak distances for one system's state representation.
class MetricPair {
 public:
  explicit MetricPair(const ToySystem& sys);

  double strong(std::span<const double> u, std::span<const double> v) const;
  double weak(std::span<const double> u, std::span<const double> v) const;
  double distance(MetricKind kind, std::span<const double> u, std::span<const double> v) const;

  /// Bound on the part of d_w lost to truncation (2^{-N} for sequences,
  /// the weight integral beyond the grid for the shift system).
  double weak_tail_bound() const;

 private:
  ToySystem sys_;
  std::vector<double> trap_weights_;  // grid systems only
  std::vector<double> decay_weights_;  // 2^{-n} or 2^{-|x|} (times trapezoid weight)
};

/// Closed-form flow map. Throws std::invalid_argument for t < 0 or a state of the
/// wrong size. Shift times that are not multiples of dx use linear interpolation.
ToyState flow(const ToySystem& sys, double t, const ToyState& u0);

/// Coordinate box {u : lo_n <= u_n <= hi_n}; distance to it is attained at the
/// clamp for both metrics since each is monotone in every |u_n - v_n|.
struct BoxSet {
  std::vector<double> lo;
  std::vector<double> hi;

  static BoxSet origin(std::size_t size);
  /// {u : u_1 in [-1, 1], u_n = 0 for n >= 2}.
  static BoxSet first_mode_interval(std::size_t size);

  ToyState project(std::span<const double> u) const;
};

double distance_to_set(const MetricPair& metrics, MetricKind kind, std::span<const double> u, const BoxSet& set);

/// sup over the ensemble of d(flow(t, u0), set). Throws on an empty ensemble.
double attraction_radius(const ToySystem& sys, const BoxSet& set, double t, MetricKind kind,
                         const std::vector<ToyState>& ensemble);

/// e_1, ..., e_max_mode.
std::vector<ToyState> unit_basis_ensemble(const ToySystem& sys, std::size_t max_mode);
/// Uniform samples from the unit l^2 ball (sequence systems).
std::vector<ToyState> random_ball_ensemble(const ToySystem& sys, std::size_t count, std::uint64_t seed);
/// Random profiles supported in [-support, 0] with unit L^2 norm (shift system).
std::vector<ToyState> shift_bump_ensemble(const ToySystem& sys, std::size_t count, std::uint64_t seed,
                                          double support = 4.0);

/// Uniform bound sum_{n<=N} 2^{-n} phi(e^{-t/n}) + 2^{-N} on the weak radius of
/// the mode-decay flow over the unit ball, phi(x) = x / (1 + x).
double mode_decay_weak_bound(std::size_t modes, double t);
/// Smallest t (to 1e-6) with mode_decay_weak_bound(modes, t) < eps.
double mode_decay_weak_horizon(std::size_t modes, double eps);

}  // namespace tns::evolution
