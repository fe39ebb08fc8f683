#pragma once

#include <string>

namespace tns {

enum class AnalyticLabel { global_regular, local_regular, blowup, gap };
enum class EmpiricalLabel { bounded_enstrophy, transient_growth, quasi_blowup, unresolved };

/// global_regular if beta <= alpha + 1, else local_regular if 2beta < 3alpha + 2,
/// else blowup if 2beta > 3alpha + 3, else gap.
AnalyticLabel analytic_label(double alpha, double beta);

const char* to_string(AnalyticLabel label);
const char* to_string(EmpiricalLabel label);

/// Peaks from a coarse and a fine (2x modes) run of the same point.
struct RefinementEvidence {
  bool resolved = true;             // both runs completed without failure
  double initial_bound = 0.0;       // max(||u0||, |g|/nu)
  double peak_enstrophy_coarse = 0.0;
  double peak_enstrophy_fine = 0.0;
  double peak_blowup_coarse = 0.0;
  double peak_blowup_fine = 0.0;
  bool event_fired = false;         // fine peak blowup_norm above the threshold
};

struct ClassifierRules {
  double enstrophy_factor = 10.0;   // bounded if peak ||u|| < factor * initial_bound
  double saturation_tol = 0.02;     // relative change of peak ||u|| under refinement
  double growth_min = 1.2;          // fine/coarse blowup-norm ratio counted as growth
};

/// unresolved when a run failed; quasi_blowup when the event fired and the
/// blowup-norm peak grew by at least growth_min; bounded_enstrophy when the
/// enstrophy peak is below the bound and saturated; otherwise transient_growth.
EmpiricalLabel classify(const RefinementEvidence& ev, const ClassifierRules& rules = {});

}  // namespace tns
