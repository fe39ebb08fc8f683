#include "tns/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace tns {

void ModelParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ModelError("alpha must be positive");
  if (!(beta > 1.0) || !std::isfinite(beta)) throw ModelError("beta must exceed 1");
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw ModelError("nu must be nonnegative");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ModelError("gamma must be positive");
  if (n_modes < 2) throw ModelError("n_modes must be at least 2");
}

ModelParams ModelParams::for_dimension(int d, double nu, double gamma, std::size_t n_modes) {
  if (d < 1) throw ModelError("dimension must be positive");
  ModelParams p;
  p.alpha = 2.0 / d;
  p.beta = 1.5 + 1.0 / d;
  p.nu = nu;
  p.gamma = gamma;
  p.n_modes = n_modes;
  p.validate();
  return p;
}

double default_blowup_gamma(double alpha, double beta) {
  const double excess = 2.0 * beta - 3.0 * alpha - 3.0;
  if (!(excess > 0.0)) throw ModelError("default gamma requires 2 beta > 3 alpha + 3");
  return std::min(1.0, excess) / 2.0;
}

StateVec StateVec::unit(std::size_t n, std::size_t mode, double amplitude) {
  if (mode < 1 || mode > n) throw ModelError("unit vector mode out of range");
  StateVec u(n);
  u[mode - 1] = amplitude;
  return u;
}

bool StateVec::all_finite() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](double x) { return std::isfinite(x); });
}

double StateVec::min_coeff() const {
  return coeffs_.empty() ? 0.0 : *std::min_element(coeffs_.begin(), coeffs_.end());
}

double StateVec::max_abs() const {
  double m = 0.0;
  for (double x : coeffs_) m = std::max(m, std::abs(x));
  return m;
}

Forcing::Forcing(std::vector<double> values, std::optional<std::size_t> support_bound)
    : values_(std::move(values)), support_bound_(support_bound) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
      throw ModelError("forcing entries must be finite and nonnegative (g_" + std::to_string(i + 1) + ")");
    }
  }
  if (support_bound_) {
    if (*support_bound_ < 1) throw ModelError("support bound must be at least 1");
    for (std::size_t n = *support_bound_; n <= values_.size(); ++n) {
      if (values_[n - 1] != 0.0) {
        throw ModelError("forcing has nonzero entry at or beyond its support bound");
      }
    }
  }
}

Forcing Forcing::single_mode(std::size_t n, double g1) {
  std::vector<double> v(n, 0.0);
  if (n > 0) v[0] = g1;
  return Forcing(std::move(v), std::size_t{2});
}

double Forcing::norm() const { return std::sqrt(inner(values_, values_)); }

bool Forcing::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return x == 0.0; });
}

double inner(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ModelError("inner product of vectors with different lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

std::vector<double> index_powers(std::size_t count, double exponent) {
  std::vector<double> w(count);
  for (std::size_t i = 0; i < count; ++i) {
    w[i] = std::exp(exponent * std::log(static_cast<double>(i + 1)));
  }
  return w;
}

TnsModel::TnsModel(const ModelParams& params) : params_(params) {
  params_.validate();
  const std::size_t n = params_.n_modes;
  a_pow_ = index_powers(n, params_.alpha);
  b_pow_ = index_powers(n + 1, params_.beta);
  gamma_pow_ = index_powers(n, params_.gamma);
  blowup_pow_ = index_powers(n, params_.blowup_exponent());
}

void TnsModel::check_size(const StateVec& u) const {
  if (u.size() != params_.n_modes) {
    throw ModelError("state has " + std::to_string(u.size()) + " modes, model expects " +
                     std::to_string(params_.n_modes));
  }
}

StateVec TnsModel::apply_A(const StateVec& u) const {
  check_size(u);
  StateVec out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = a_pow_[i] * u[i];
  return out;
}

StateVec TnsModel::apply_B(const StateVec& u, const StateVec& v) const {
  check_size(u);
  check_size(v);
  const std::size_t n = u.size();
  StateVec out(n);
  // (B(u,v))_n = -n^beta u_{n-1} v_{n-1} + (n+1)^beta u_n v_{n+1}; storage index i = n - 1.
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    if (i > 0) s -= b_pow_[i] * u[i - 1] * v[i - 1];
    if (i + 1 < n) s += b_pow_[i + 1] * u[i] * v[i + 1];
    out[i] = s;
  }
  return out;
}

void TnsModel::nonlinear_rhs(std::span<const double> u, std::span<const double> g, std::span<double> out) const {
  const std::size_t n = params_.n_modes;
  const double* b = b_pow_.data();
  // Flux from mode n to n+1: (n+1)^beta u_n^2 u_{n+1}; per-mode form below.
  double prev_sq = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double ui = u[i];
    out[i] = g[i] + b[i] * prev_sq - b[i + 1] * ui * u[i + 1];
    prev_sq = ui * ui;
  }
  out[n - 1] = g[n - 1] + b[n - 1] * prev_sq;
}

StateVec TnsModel::rhs(const StateVec& u, const Forcing& g) const {
  check_size(u);
  if (g.size() != u.size()) throw ModelError("forcing length does not match state length");
  StateVec out(u.size());
  nonlinear_rhs(u.data(), g.data(), out.data());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] -= params_.nu * a_pow_[i] * u[i];
  return out;
}

namespace {

double weighted_sq(std::span<const double> w, const StateVec& u) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += w[i] * u[i] * u[i];
  return s;
}

}  // namespace

NormReport TnsModel::norms(const StateVec& u) const {
  check_size(u);
  NormReport r;
  r.energy = std::sqrt(inner(u, u));
  r.enstrophy = std::sqrt(weighted_sq(a_pow_, u));
  r.gamma_norm = std::sqrt(weighted_sq(gamma_pow_, u));
  r.blowup_norm = std::sqrt(weighted_sq(blowup_pow_, u));
  return r;
}

double TnsModel::weighted_norm(const StateVec& u, double exponent) const {
  check_size(u);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    s += std::exp(exponent * std::log(static_cast<double>(i + 1))) * u[i] * u[i];
  }
  return std::sqrt(s);
}

bool in_sharp_estimate_window(double alpha, double beta) {
  return beta >= alpha / 2.0 + 1.0 && beta <= 1.5 * alpha + 1.0;
}

double TnsModel::sharp_estimate_ratio(const StateVec& u) const {
  check_size(u);
  const double alpha = params_.alpha;
  const double beta = params_.beta;
  if (!in_sharp_estimate_window(alpha, beta)) {
    throw ModelError("sharp estimate requires beta in [alpha/2 + 1, 3 alpha/2 + 1]");
  }
  const StateVec au = apply_A(u);
  const double au_norm = std::sqrt(inner(au, au));
  if (au_norm == 0.0) throw ModelError("sharp estimate ratio undefined for the zero state");
  const double enstrophy = std::sqrt(weighted_sq(a_pow_, u));
  const double p = 2.0 * beta / alpha - 2.0 / alpha - 1.0;
  const double q = -2.0 * beta / alpha + 2.0 / alpha + 4.0;
  const double numerator = std::abs(inner(apply_B(u, u), au));
  return numerator / (c_b(alpha, beta) * std::pow(au_norm, p) * std::pow(enstrophy, q));
}

double c_b(double alpha, double beta) {
  if (!(alpha > 0.0)) throw ModelError("c_b requires alpha > 0");
  return alpha <= 1.0 ? alpha * std::pow(2.0, beta) : alpha * std::pow(2.0, alpha + beta - 1.0);
}

std::pair<Rational, Rational> sharp_estimate_exponents(Rational alpha, Rational beta) {
  if (alpha <= 0) throw ModelError("alpha must be positive");
  const Rational two(2);
  const Rational p = two * beta / alpha - two / alpha - 1;
  const Rational q = -two * beta / alpha + two / alpha + 4;
  return {p, q};
}

SharpnessSearch two_mode_sharpness(const ModelParams& params, std::size_t max_mode) {
  ModelParams p = params;
  p.n_modes = max_mode + 1;
  const TnsModel model(p);
  SharpnessSearch best;
  for (std::size_t n = 1; n <= max_mode; ++n) {
    for (int k = -8; k <= 8; ++k) {
      const double r = std::ldexp(1.0, k);
      StateVec u(p.n_modes);
      u[n - 1] = 1.0;
      u[n] = r;
      const double ratio = model.sharp_estimate_ratio(u);
      if (ratio > best.sup_ratio) best = {ratio, n, r};
    }
  }
  return best;
}

}  // namespace tns
