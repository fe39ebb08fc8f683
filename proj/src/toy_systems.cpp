#include "tns/toy_systems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tns/random.hpp"

namespace tns::evolution {

namespace {

double phi(double x) { return x / (1.0 + x); }

void require_same_length(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("states differ in length");
}

void require_size(const ToySystem& sys, std::span<const double> u) {
  if (u.size() != sys.size) throw std::invalid_argument("state length does not match the system");
}

}  // namespace

const char* to_string(ToyKind kind) {
  switch (kind) {
    case ToyKind::shift: return "shift";
    case ToyKind::mode_decay: return "mode_decay";
    case ToyKind::frozen_first: return "frozen_first";
  }
  return "unknown";
}

ToySystem ToySystem::shift(std::size_t points, double domain_length) {
  if (points < 2 || !(domain_length > 0.0)) throw std::invalid_argument("shift grid needs >= 2 points on a positive domain");
  return {ToyKind::shift, points, domain_length};
}

ToySystem ToySystem::mode_decay(std::size_t modes) {
  if (modes == 0) throw std::invalid_argument("mode count must be positive");
  return {ToyKind::mode_decay, modes, 0.0};
}

ToySystem ToySystem::frozen_first(std::size_t modes) {
  if (modes == 0) throw std::invalid_argument("mode count must be positive");
  return {ToyKind::frozen_first, modes, 0.0};
}

double d_w(std::span<const double> u, std::span<const double> v) {
  require_same_length(u, v);
  double s = 0.0;
  double w = 0.5;
  for (std::size_t i = 0; i < u.size(); ++i, w *= 0.5) s += w * phi(std::abs(u[i] - v[i]));
  return s;
}

double d_s(std::span<const double> u, std::span<const double> v) {
  require_same_length(u, v);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - v[i]) * (u[i] - v[i]);
  return std::sqrt(s);
}

MetricPair::MetricPair(const ToySystem& sys) : sys_(sys) {
  if (!sys.is_grid()) return;
  const double dx = sys.dx();
  trap_weights_.assign(sys.size, dx);
  trap_weights_.front() = trap_weights_.back() = 0.5 * dx;
  decay_weights_.resize(sys.size);
  for (std::size_t k = 0; k < sys.size; ++k) decay_weights_[k] = trap_weights_[k] * std::exp2(-std::abs(sys.node(k)));
}

double MetricPair::strong(std::span<const double> u, std::span<const double> v) const {
  require_same_length(u, v);
  if (!sys_.is_grid()) return d_s(u, v);
  require_size(sys_, u);
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += trap_weights_[k] * (u[k] - v[k]) * (u[k] - v[k]);
  return std::sqrt(s);
}

double MetricPair::weak(std::span<const double> u, std::span<const double> v) const {
  require_same_length(u, v);
  if (!sys_.is_grid()) return d_w(u, v);
  require_size(sys_, u);
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += decay_weights_[k] * phi(std::abs(u[k] - v[k]));
  return s;
}

double MetricPair::distance(MetricKind kind, std::span<const double> u, std::span<const double> v) const {
  return kind == MetricKind::strong ? strong(u, v) : weak(u, v);
}

double MetricPair::weak_tail_bound() const {
  if (sys_.is_grid()) return std::exp2(-sys_.domain_length + sys_.dx()) / std::numbers::ln2;
  return std::exp2(-static_cast<double>(sys_.size));
}

ToyState flow(const ToySystem& sys, double t, const ToyState& u0) {
  if (!(t >= 0.0)) throw std::invalid_argument("flow time must be nonnegative");
  require_size(sys, u0);
  ToyState out(u0.size(), 0.0);
  switch (sys.kind) {
    case ToyKind::mode_decay:
      for (std::size_t i = 0; i < u0.size(); ++i) out[i] = u0[i] * std::exp(-t / static_cast<double>(i + 1));
      break;
    case ToyKind::frozen_first: {
      const double decay = std::exp(-t);
      out[0] = u0[0];
      for (std::size_t i = 1; i < u0.size(); ++i) out[i] = u0[i] * decay;
      break;
    }
    case ToyKind::shift: {
      // u(t)(x) = u0(x + t), zero where x + t > 0.
      const double s = t / sys.dx();
      const double whole = std::round(s);
      const std::size_t m = u0.size();
      auto at = [&](double idx) { return idx < static_cast<double>(m) ? u0[static_cast<std::size_t>(idx)] : 0.0; };
      if (std::abs(s - whole) <= 1e-9 * std::max(1.0, s)) {
        for (std::size_t k = 0; k < m; ++k) out[k] = at(static_cast<double>(k) + whole);
      } else {
        const double base = std::floor(s);
        const double frac = s - base;
        for (std::size_t k = 0; k < m; ++k) {
          const double i = static_cast<double>(k) + base;
          out[k] = (1.0 - frac) * at(i) + frac * at(i + 1.0);
        }
      }
      break;
    }
  }
  return out;
}

BoxSet BoxSet::origin(std::size_t size) { return {std::vector<double>(size, 0.0), std::vector<double>(size, 0.0)}; }

BoxSet BoxSet::first_mode_interval(std::size_t size) {
  BoxSet b = origin(size);
  if (size > 0) {
    b.lo[0] = -1.0;
    b.hi[0] = 1.0;
  }
  return b;
}

ToyState BoxSet::project(std::span<const double> u) const {
  if (u.size() != lo.size() || u.size() != hi.size()) throw std::invalid_argument("box and state differ in length");
  ToyState p(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) p[i] = std::clamp(u[i], lo[i], hi[i]);
  return p;
}

double distance_to_set(const MetricPair& metrics, MetricKind kind, std::span<const double> u, const BoxSet& set) {
  const ToyState p = set.project(u);
  return metrics.distance(kind, u, p);
}

double attraction_radius(const ToySystem& sys, const BoxSet& set, double t, MetricKind kind,
                         const std::vector<ToyState>& ensemble) {
  if (ensemble.empty()) throw std::invalid_argument("attraction radius needs a nonempty ensemble");
  const MetricPair metrics(sys);
  double r = 0.0;
  for (const auto& u0 : ensemble) r = std::max(r, distance_to_set(metrics, kind, flow(sys, t, u0), set));
  return r;
}

std::vector<ToyState> unit_basis_ensemble(const ToySystem& sys, std::size_t max_mode) {
  if (sys.is_grid()) throw std::invalid_argument("unit basis ensemble applies to sequence systems");
  const std::size_t m = std::min(max_mode, sys.size);
  std::vector<ToyState> out;
  out.reserve(m);
  for (std::size_t n = 0; n < m; ++n) {
    ToyState e(sys.size, 0.0);
    e[n] = 1.0;
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ToyState> random_ball_ensemble(const ToySystem& sys, std::size_t count, std::uint64_t seed) {
  if (sys.is_grid()) throw std::invalid_argument("ball ensemble applies to sequence systems");
  Rng rng(seed);
  std::vector<ToyState> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(ball_sample(rng, sys.size, 1.0, false));
  return out;
}

std::vector<ToyState> shift_bump_ensemble(const ToySystem& sys, std::size_t count, std::uint64_t seed,
                                          double support) {
  if (!sys.is_grid()) throw std::invalid_argument("bump ensemble applies to the shift system");
  if (!(support > 0.0) || support >= sys.domain_length) throw std::invalid_argument("bump support must fit the domain");
  Rng rng(seed);
  const MetricPair metrics(sys);
  const ToyState zero(sys.size, 0.0);
  std::vector<ToyState> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    // Sum of three sine bumps on random subintervals of [-support, 0].
    ToyState u(sys.size, 0.0);
    for (int b = 0; b < 3; ++b) {
      // Each bump lives in [a, a + w] with a + w <= 0, so it vanishes at the grid ends.
      const double a = -support * (0.0625 + 0.9375 * uniform01(rng));
      const double w = -a * std::max(0.1, uniform01(rng));
      const double amp = uniform(rng, -1.0, 1.0);
      for (std::size_t i = 0; i < sys.size; ++i) {
        const double x = sys.node(i);
        if (x > a && x < a + w) u[i] += amp * std::sin(std::numbers::pi * (x - a) / w);
      }
    }
    const double norm = metrics.strong(u, zero);
    if (norm > 0.0) {
      for (auto& v : u) v /= norm;
    }
    out.push_back(std::move(u));
  }
  return out;
}

double mode_decay_weak_bound(std::size_t modes, double t) {
  double s = 0.0;
  double w = 0.5;
  for (std::size_t n = 1; n <= modes; ++n, w *= 0.5) s += w * phi(std::exp(-t / static_cast<double>(n)));
  return s + std::exp2(-static_cast<double>(modes));
}

double mode_decay_weak_horizon(std::size_t modes, double eps) {
  if (!(eps > std::exp2(-static_cast<double>(modes)))) {
    throw std::invalid_argument("eps is below the truncation tail 2^-N");
  }
  double hi = 1.0;
  while (!(mode_decay_weak_bound(modes, hi) < eps)) hi *= 2.0;
  double lo = 0.0;
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (mode_decay_weak_bound(modes, mid) < eps ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace tns::evolution
