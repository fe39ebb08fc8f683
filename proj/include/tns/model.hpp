#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

namespace tns {

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exponents and truncation level of one tridiagonal model instance.
///
/// nu == 0 selects the inviscid (Euler) variant.
struct ModelParams {
  double alpha = 2.0 / 3.0;
  double beta = 11.0 / 6.0;
  double nu = 1.0;
  double gamma = 0.5;
  std::size_t n_modes = 64;

  /// Throws ModelError on alpha <= 0, beta <= 1, nu < 0, gamma <= 0 or n_modes < 2.
  void validate() const;

  bool global_regular() const { return beta <= alpha + 1.0; }
  bool local_regular() const { return 2.0 * beta < 3.0 * alpha + 2.0; }
  bool blowup_regime() const { return 2.0 * beta > 3.0 * alpha + 3.0; }

  /// Exponent 2(beta + gamma - 1)/3 of the norm that blows up.
  double blowup_exponent() const { return 2.0 * (beta + gamma - 1.0) / 3.0; }

  /// Exponent pair matching d-dimensional Navier-Stokes scaling:
  /// alpha = 2/d, beta = 3/2 + 1/d.
  static ModelParams for_dimension(int d, double nu, double gamma, std::size_t n_modes);
};

/// Midpoint of the admissible interval (0, min(2 beta - 3 alpha - 3, 1)).
/// Throws ModelError outside the blow-up regime.
double default_blowup_gamma(double alpha, double beta);

/// Galerkin phase point (u_1, ..., u_N); u_0 = u_{N+1} = 0 implicitly.
/// Index i of the storage holds mode n = i + 1.
class StateVec {
 public:
  StateVec() = default;
  explicit StateVec(std::size_t n, double value = 0.0) : coeffs_(n, value) {}
  explicit StateVec(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {}
  StateVec(std::initializer_list<double> init) : coeffs_(init) {}

  static StateVec unit(std::size_t n, std::size_t mode, double amplitude = 1.0);

  std::size_t size() const { return coeffs_.size(); }
  double& operator[](std::size_t i) { return coeffs_[i]; }
  double operator[](std::size_t i) const { return coeffs_[i]; }
  /// Coefficient of mode n (1-based), zero outside 1..N.
  double mode(std::size_t n) const { return (n >= 1 && n <= coeffs_.size()) ? coeffs_[n - 1] : 0.0; }

  std::span<double> data() { return coeffs_; }
  std::span<const double> data() const { return coeffs_; }
  const std::vector<double>& values() const { return coeffs_; }

  bool all_finite() const;
  double min_coeff() const;
  double max_abs() const;

  bool operator==(const StateVec&) const = default;

 private:
  std::vector<double> coeffs_;
};

/// Nonnegative forcing vector with optional support bound N_g
/// (g_n == 0 for all modes n >= N_g).
class Forcing {
 public:
  Forcing() = default;
  explicit Forcing(std::vector<double> values, std::optional<std::size_t> support_bound = std::nullopt);

  static Forcing zero(std::size_t n) { return Forcing(std::vector<double>(n, 0.0)); }
  /// g = g1 e_1, support bound 2.
  static Forcing single_mode(std::size_t n, double g1);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> data() const { return values_; }
  std::optional<std::size_t> support_bound() const { return support_bound_; }
  double norm() const;
  bool is_zero() const;

 private:
  std::vector<double> values_;
  std::optional<std::size_t> support_bound_;
};

struct NormReport {
  double energy = 0.0;       // |u|
  double enstrophy = 0.0;    // ||u|| = |A^{1/2} u|
  double gamma_norm = 0.0;   // ||u||_gamma
  double blowup_norm = 0.0;  // ||u||_{2(beta+gamma-1)/3}
};

double inner(std::span<const double> u, std::span<const double> v);
inline double inner(const StateVec& u, const StateVec& v) { return inner(u.data(), v.data()); }

/// One model instance with its cached index weights n^e.
///
/// Immutable after construction; every member is safe to call concurrently.
class TnsModel {
 public:
  explicit TnsModel(const ModelParams& params);

  const ModelParams& params() const { return params_; }
  std::size_t size() const { return params_.n_modes; }

  /// n^alpha, n = 1..N (eigenvalues of A).
  std::span<const double> a_weights() const { return a_pow_; }
  /// n^beta, n = 1..N+1 (the extra entry is (N+1)^beta).
  std::span<const double> b_weights() const { return b_pow_; }
  std::span<const double> gamma_weights() const { return gamma_pow_; }
  std::span<const double> blowup_weights() const { return blowup_pow_; }

  StateVec apply_A(const StateVec& u) const;
  StateVec apply_B(const StateVec& u, const StateVec& v) const;
  /// g - nu A u - B(u, u)
  StateVec rhs(const StateVec& u, const Forcing& g) const;
  /// Nonlinear plus forcing part g - B(u, u), written into out (no allocation).
  void nonlinear_rhs(std::span<const double> u, std::span<const double> g, std::span<double> out) const;

  NormReport norms(const StateVec& u) const;
  /// (sum n^e u_n^2)^{1/2} for an arbitrary exponent e.
  double weighted_norm(const StateVec& u, double exponent) const;

  /// |(B(u,u), Au)| / (c_b |Au|^p ||u||^q). Throws ModelError when
  /// beta is outside [alpha/2 + 1, 3 alpha/2 + 1] or u == 0.
  double sharp_estimate_ratio(const StateVec& u) const;

 private:
  void check_size(const StateVec& u) const;

  ModelParams params_;
  std::vector<double> a_pow_;
  std::vector<double> b_pow_;
  std::vector<double> gamma_pow_;
  std::vector<double> blowup_pow_;
};

/// n^e for n = 1..count, computed as exp(e ln n).
std::vector<double> index_powers(std::size_t count, double exponent);

/// Enstrophy-estimate constant: alpha 2^beta for alpha <= 1, alpha 2^(alpha+beta-1) otherwise.
double c_b(double alpha, double beta);

using Rational = boost::rational<long long>;

/// Exponents (p, q) in |(B(u,u),Au)| <= c_b |Au|^p ||u||^q, in exact arithmetic:
/// p = 2beta/alpha - 2/alpha - 1, q = -2beta/alpha + 2/alpha + 4.
std::pair<Rational, Rational> sharp_estimate_exponents(Rational alpha, Rational beta);

bool in_sharp_estimate_window(double alpha, double beta);

/// Result of the two-consecutive-mode sharpness search.
struct SharpnessSearch {
  double sup_ratio = 0.0;
  std::size_t best_mode = 0;
  double best_amplitude_ratio = 0.0;
};

/// Sup of sharp_estimate_ratio over u = e_n + r e_{n+1},
/// n in 1..max_mode, r in {+-2^k : k = -8..8}.
SharpnessSearch two_mode_sharpness(const ModelParams& params, std::size_t max_mode = 64);

}  // namespace tns
