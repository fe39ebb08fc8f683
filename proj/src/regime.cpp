#include "tns/regime.hpp"

#include <cmath>

namespace tns {

AnalyticLabel analytic_label(double alpha, double beta) {
  if (beta <= alpha + 1.0) return AnalyticLabel::global_regular;
  if (2.0 * beta < 3.0 * alpha + 2.0) return AnalyticLabel::local_regular;
  if (2.0 * beta > 3.0 * alpha + 3.0) return AnalyticLabel::blowup;
  return AnalyticLabel::gap;
}

const char* to_string(AnalyticLabel label) {
  switch (label) {
    case AnalyticLabel::global_regular: return "global_regular";
    case AnalyticLabel::local_regular: return "local_regular";
    case AnalyticLabel::blowup: return "blowup";
    case AnalyticLabel::gap: return "gap";
  }
  return "unknown";
}

const char* to_string(EmpiricalLabel label) {
  switch (label) {
    case EmpiricalLabel::bounded_enstrophy: return "bounded_enstrophy";
    case EmpiricalLabel::transient_growth: return "transient_growth";
    case EmpiricalLabel::quasi_blowup: return "quasi_blowup";
    case EmpiricalLabel::unresolved: return "unresolved";
  }
  return "unknown";
}

EmpiricalLabel classify(const RefinementEvidence& ev, const ClassifierRules& rules) {
  if (!ev.resolved) return EmpiricalLabel::unresolved;
  const bool grows = ev.peak_blowup_fine >= rules.growth_min * ev.peak_blowup_coarse && ev.peak_blowup_fine > 0.0;
  if (ev.event_fired && grows) return EmpiricalLabel::quasi_blowup;
  const double fine = ev.peak_enstrophy_fine;
  const bool bounded = fine == 0.0 || fine < rules.enstrophy_factor * ev.initial_bound;
  const bool saturated = fine == 0.0 || std::abs(fine - ev.peak_enstrophy_coarse) <= rules.saturation_tol * fine;
  if (bounded && saturated) return EmpiricalLabel::bounded_enstrophy;
  return EmpiricalLabel::transient_growth;
}

}  // namespace tns
