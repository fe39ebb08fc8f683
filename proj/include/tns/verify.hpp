#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tns/experiments.hpp"
#include "tns/model.hpp"

namespace tns {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Replacement for TnsModel::apply_B in the algebraic checks.
using BilinearForm = std::function<StateVec(const TnsModel&, const StateVec&, const StateVec&)>;

/// B with the sign of the -n^beta u_{n-1} v_{n-1} term flipped at mode n.
BilinearForm sign_flipped_bilinear(std::size_t mode);

struct VerifyOptions {
  double tolerance_factor = 1.0;  // integrator rel_tol and abs_tol are divided by this
  BilinearForm bilinear;          // empty: the model's own apply_B
  std::uint64_t seed = 0;
};

/// Algebraic identities of B and the norms.
std::vector<CheckResult> algebra_checks(const VerifyOptions& opt);
/// Stepper and trajectory properties at the configured tolerance.
std::vector<CheckResult> integration_checks(const VerifyOptions& opt);
/// Theta, Riccati and toy-system oracles.
std::vector<CheckResult> oracle_checks(const VerifyOptions& opt);

/// Every group above, plus a fault-injection check that the orthogonality test
/// rejects a sign-flipped B and a rerun of the integration checks at rel_tol / 10.
std::vector<CheckResult> run_verification(const VerifyOptions& opt = {});

bool all_passed(const std::vector<CheckResult>& checks);
void print_checks(std::ostream& os, const std::vector<CheckResult>& checks);

int cmd_verify(const CommandOptions& opt, std::ostream& out, std::ostream& log);

}  // namespace tns
