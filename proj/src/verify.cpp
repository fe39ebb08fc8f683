#include "tns/verify.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "tns/diagnostics.hpp"
#include "tns/integrator.hpp"
#include "tns/random.hpp"
#include "tns/toy_systems.hpp"

namespace tns {

namespace {

CheckResult make(std::string name, bool ok, std::string detail) { return {std::move(name), ok, std::move(detail)}; }

StateVec apply(const VerifyOptions& opt, const TnsModel& m, const StateVec& u, const StateVec& v) {
  return opt.bilinear ? opt.bilinear(m, u, v) : m.apply_B(u, v);
}

// Random state: a ball sample, optionally with a power-law spectral profile.
StateVec random_state(Rng& rng, std::size_t n) {
  std::vector<double> x = ball_sample(rng, n, uniform(rng, 0.1, 10.0), false);
  const double decay = uniform(rng, -1.0, 3.0);
  for (std::size_t i = 0; i < n; ++i) x[i] *= std::pow(static_cast<double>(i + 1), -decay);
  return StateVec(std::move(x));
}

// Sum of |summands| of (B(u,v), v); the round-off scale of the cancellation.
double orthogonality_scale(const TnsModel& m, const StateVec& u, const StateVec& v) {
  const auto b = m.b_weights();
  const std::size_t n = u.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? b[i] * std::abs(u[i - 1] * v[i - 1]) : 0.0;
    const double right = i + 1 < n ? b[i + 1] * std::abs(u[i] * v[i + 1]) : 0.0;
    s += std::abs(v[i]) * (left + right);
  }
  return s;
}

IntegratorConfig tightened(const VerifyOptions& opt) {
  IntegratorConfig c;
  c.rel_tol /= opt.tolerance_factor;
  c.abs_tol /= opt.tolerance_factor;
  return c;
}

std::string tol_tag(const VerifyOptions& opt) {
  return opt.tolerance_factor == 1.0 ? std::string() : fmt::format(" [rel_tol/{:g}]", opt.tolerance_factor);
}

}  // namespace

BilinearForm sign_flipped_bilinear(std::size_t mode) {
  return [mode](const TnsModel& m, const StateVec& u, const StateVec& v) {
    StateVec r = m.apply_B(u, v);
    if (mode >= 2 && mode <= u.size()) {
      const std::size_t i = mode - 1;
      r[i] += 2.0 * m.b_weights()[i] * u[i - 1] * v[i - 1];
    }
    return r;
  };
}

std::vector<CheckResult> algebra_checks(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  Rng rng(opt.seed + 1);
  const double betas[] = {1.5, 2.0, 3.0};

  {
    double worst = 0.0;
    for (const std::size_t n : {16u, 128u, 512u}) {
      for (const double beta : betas) {
        const TnsModel m({1.0, beta, 1.0, 0.5, n});
        for (int k = 0; k < 100; ++k) {
          const StateVec u = random_state(rng, n), v = random_state(rng, n);
          const double r = std::abs(inner(apply(opt, m, u, v), v)) / (1.0 + orthogonality_scale(m, u, v));
          worst = std::max(worst, r);
        }
      }
    }
    out.push_back(make("orthogonality (B(u,v),v) = 0", worst <= 1e-12, fmt::format("worst scaled {:.3e} <= 1e-12", worst)));
  }

  {
    double worst = 0.0;
    for (const double beta : betas) {
      const TnsModel m({0.7, beta, 1.0, 0.5, 64});
      for (int k = 0; k < 50; ++k) {
        const StateVec u = random_state(rng, 64), w = random_state(rng, 64), v = random_state(rng, 64);
        const double a = uniform(rng, -2.0, 2.0), b = uniform(rng, -2.0, 2.0);
        StateVec mix(64);
        for (std::size_t i = 0; i < 64; ++i) mix[i] = a * u[i] + b * w[i];
        const StateVec l1 = apply(opt, m, mix, v), bu = apply(opt, m, u, v), bw = apply(opt, m, w, v);
        const StateVec l2 = apply(opt, m, v, mix), cu = apply(opt, m, v, u), cw = apply(opt, m, v, w);
        const double scale = 1.0 + (std::abs(a) + std::abs(b)) *
                                       (orthogonality_scale(m, u, v) + orthogonality_scale(m, w, v) +
                                        bu.max_abs() + bw.max_abs() + cu.max_abs() + cw.max_abs());
        for (std::size_t i = 0; i < 64; ++i) {
          worst = std::max(worst, std::abs(l1[i] - a * bu[i] - b * bw[i]) / scale);
          worst = std::max(worst, std::abs(l2[i] - a * cu[i] - b * cw[i]) / scale);
        }
      }
    }
    out.push_back(make("bilinearity in both slots", worst <= 1e-13, fmt::format("worst scaled {:.3e} <= 1e-13", worst)));
  }

  {
    double worst = 0.0;
    const std::pair<double, double> points[] = {{2.0 / 3.0, 11.0 / 6.0}, {1.0, 2.0}, {0.5, 1.75}};
    for (const auto& [alpha, beta] : points) {
      const TnsModel m({alpha, beta, 1.0, 0.5, 64});
      for (int k = 0; k < 300; ++k) worst = std::max(worst, m.sharp_estimate_ratio(random_state(rng, 64)));
    }
    out.push_back(make("sharp enstrophy estimate ratio <= 1", worst <= 1.0 + 1e-10,
                       fmt::format("worst ratio {:.6f} <= 1 + 1e-10", worst)));
  }

  {
    const auto [p, q] = sharp_estimate_exponents(Rational(2, 3), Rational(11, 6));
    const bool ok = p == Rational(3, 2) && q == Rational(3, 2);
    out.push_back(make("exponents at (2/3, 11/6) equal (3/2, 3/2)", ok,
                       fmt::format("p = {}/{}, q = {}/{}", p.numerator(), p.denominator(), q.numerator(), q.denominator())));
  }

  {
    double worst = 0.0;
    for (const double beta : betas) {
      const ModelParams prm{0.8, beta, 0.7, 0.5, 96};
      const TnsModel m(prm);
      for (int k = 0; k < 50; ++k) {
        const StateVec u = random_state(rng, 96);
        std::vector<double> gv(96, 0.0);
        for (std::size_t i = 0; i < 8; ++i) gv[i] = uniform(rng, 0.0, 5.0);
        const Forcing g(gv);
        const StateVec r = m.rhs(u, g);
        const NormReport nr = m.norms(u);
        const double expect = inner(g.data(), u.data()) - prm.nu * nr.enstrophy * nr.enstrophy;
        const double scale = 1.0 + orthogonality_scale(m, u, u) + prm.nu * nr.enstrophy * nr.enstrophy +
                             std::abs(inner(g.data(), u.data()));
        worst = std::max(worst, std::abs(inner(r, u) - expect) / scale);
      }
    }
    out.push_back(make("energy identity (rhs(u), u) = (g,u) - nu ||u||^2", worst <= 1e-12,
                       fmt::format("worst scaled {:.3e} <= 1e-12", worst)));
  }

  {
    bool ok = true;
    const TnsModel m({1.0, 2.0, 1.0, 0.5, 64});
    for (int k = 0; k < 200 && ok; ++k) {
      const StateVec u = random_state(rng, 64);
      const double g1 = uniform(rng, 0.0, 3.0), g2 = g1 + uniform(rng, 0.0, 3.0);
      ok = m.weighted_norm(u, g1) <= m.weighted_norm(u, g2) * (1.0 + 1e-15);
    }
    out.push_back(make("norm monotonicity in the exponent", ok, "||u||_g1 <= ||u||_g2 for g1 <= g2"));
  }
  return out;
}

std::vector<CheckResult> integration_checks(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  const std::string tag = tol_tag(opt);
  const IntegratorConfig ic = tightened(opt);
  Rng rng(opt.seed + 2);

  {
    const ModelParams prm{1.0, 2.0, 1.0, 0.5, 8};
    const TnsModel m(prm);
    const Forcing g = Forcing::single_mode(8, 1.0);
    StateVec u(8);
    for (std::size_t i = 0; i < 8; ++i) u[i] = 0.5 * std::pow(0.5, static_cast<double>(i));
    const double h = 0.05;
    const double e1 = step(u, h, m, g).error_estimate;
    const double e2 = step(u, 0.5 * h, m, g).error_estimate;
    const double ratio = e1 / e2;
    out.push_back(make("step error estimate scales like h^5", ratio > 24.0 && ratio < 40.0,
                       fmt::format("halving ratio {:.2f} in (24, 40)", ratio)));
  }

  {
    const ModelParams prm{1.0, 2.0, 1.0, 0.5, 16};
    const TnsModel m(prm);
    const StepResult r = step(StateVec(16), 0.1, m, Forcing::zero(16));
    out.push_back(make("zero state is a fixed point", r.state == StateVec(16) && r.error_estimate == 0.0,
                       "step(0) = 0 with zero error"));
  }

  {
    const ModelParams prm{1.0, 2.0, 1.0, 0.5, 32};
    double worst = 0.0;
    for (int k = 0; k < 4; ++k) {
      const StateVec u0(ball_sample(rng, 32, 1.0, true));
      const Trajectory tr = integrate(u0, prm, Forcing::zero(32), 5.0, ic);
      const double e0 = inner(u0, u0);
      for (std::size_t s = 0; s < tr.size(); ++s) {
        const double env = std::exp(-2.0 * prm.nu * tr.times[s]) * e0;
        worst = std::max(worst, tr.diagnostics[s].energy * tr.diagnostics[s].energy / env - 1.0);
      }
    }
    out.push_back(make("unforced decay below exp(-2 nu t)" + tag, worst <= 0.01,
                       fmt::format("worst relative excess {:.3e} <= 0.01", worst)));
  }

  {
    struct Case {
      ModelParams p;
      double g1;
    };
    const Case cases[] = {{{1.0, 1.5, 1.0, 0.5, 32}, 5.0},
                          {{2.0 / 3.0, 11.0 / 6.0, 1.0, 0.5, 32}, 5.0},
                          {{2.0 / 3.0, 3.0, 1.0, 0.5, 32}, 10.0},
                          {{0.5, 2.5, 0.5, 0.25, 16}, 2.0}};
    bool ok_e = true, ok_p = true, ok_a = true;
    std::string detail;
    for (const auto& c : cases) {
      const Forcing g = Forcing::single_mode(c.p.n_modes, c.g1);
      const StateVec u0(ball_sample(rng, c.p.n_modes, g.norm() / c.p.nu, true));
      const Trajectory tr = integrate(u0, c.p, g, 4.0, ic);
      const RunSummary s = summarize(tr, u0);
      ok_e = ok_e && s.energy_inequality.pass;
      ok_p = ok_p && s.positivity.pass;
      ok_a = ok_a && s.absorbing_ball.pass;
      detail += fmt::format(" {:.2e}/{:.2e}", s.energy_inequality.value, s.energy_inequality.bound);
    }
    out.push_back(make("energy inequality within budget" + tag, ok_e, "residual/budget:" + detail));
    out.push_back(make("positivity from nonnegative data" + tag, ok_p, "min coefficient >= -1e-8 max amplitude"));
    out.push_back(make("absorbing-ball margin within budget" + tag, ok_a, "margin >= -budget at every sample"));
  }

  {
    IntegratorConfig ec = ic;
    ec.rel_tol = std::min(ec.rel_tol, 1e-10);
    ec.abs_tol = std::min(ec.abs_tol, 1e-14);
    ec.sample_interval = 0.05;
    const ModelParams prm{1.0, 2.0, 0.0, 0.5, 32};
    const Trajectory tr = integrate(StateVec::unit(32, 1), prm, Forcing::zero(32), 10.0, ec);
    const double drift = relative_energy_drift(tr);
    const double mono = euler_monotonicity(tr, 0.5);
    const double budget = euler_monotonicity_budget(tr, 0.5);
    out.push_back(make("inviscid energy conservation" + tag, drift <= 1e-9, fmt::format("drift {:.3e} <= 1e-9", drift)));
    out.push_back(make("inviscid gamma-norm nondecreasing" + tag, mono <= budget,
                       fmt::format("worst decrease {:.3e} <= {:.3e}", mono, budget)));
  }

  {
    const ModelParams prm{2.0 / 3.0, 3.0, 1.0, 0.5, 32};
    const Forcing g = Forcing::single_mode(32, 10.0);
    const Trajectory a = integrate(StateVec(32), prm, g, 2.0, ic);
    const Trajectory b = integrate(StateVec(32), prm, g, 2.0, ic);
    const bool same = a.times == b.times && a.states == b.states;
    out.push_back(make("bit-identical repeated integration" + tag, same, fmt::format("{} samples", a.size())));
  }
  return out;
}

std::vector<CheckResult> oracle_checks(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  Rng rng(opt.seed + 3);

  {
    bool ok = true;
    std::string detail;
    for (const double c : {0.1, 0.5, 2.0}) {
      // Theta(t) = (Theta0^{-1/2} - c t / 2)^{-2} with Theta0 = 1, sampled to 90% of the blow-up time.
      ThetaSeries th;
      const double tb = 2.0 / c;
      for (int k = 0; k <= 400; ++k) {
        const double t = 0.9 * tb * k / 400.0;
        th.times.push_back(t);
        th.values.push_back(std::pow(1.0 - 0.5 * c * t, -2.0));
      }
      const double est = riccati_fit(th).c_estimate;
      ok = ok && std::abs(est - c) <= 0.01 * c;
      detail += fmt::format(" {:g}->{:.5f}", c, est);
    }
    out.push_back(make("Riccati fit recovers closed-form c to 1%", ok, "c:" + detail));
  }

  {
    using namespace evolution;
    const ToySystem seq = ToySystem::mode_decay(32);
    const MetricPair mp(seq);
    bool ok = true;
    for (int k = 0; k < 200 && ok; ++k) {
      const auto x = ball_sample(rng, 32, 1.0, false), y = ball_sample(rng, 32, 1.0, false),
                 z = ball_sample(rng, 32, 1.0, false);
      for (const MetricKind kind : {MetricKind::strong, MetricKind::weak}) {
        const double dxy = mp.distance(kind, x, y), dyx = mp.distance(kind, y, x);
        const double dxz = mp.distance(kind, x, z), dyz = mp.distance(kind, y, z);
        ok = ok && dxy == dyx && dxz <= dxy + dyz + 1e-12 && mp.distance(kind, x, x) == 0.0;
      }
    }
    const std::vector<double> e1{1.0, 0.0}, zero{0.0, 0.0};
    ok = ok && std::abs(d_w(e1, zero) - 0.25) < 1e-15;
    out.push_back(make("toy metric axioms", ok, "symmetry, triangle inequality, d(x,x) = 0, d_w(e_1, 0) = 1/4"));
  }

  {
    using namespace evolution;
    double worst = 0.0;
    for (const ToySystem& sys : {ToySystem::mode_decay(32), ToySystem::frozen_first(32)}) {
      for (int k = 0; k < 100; ++k) {
        const ToyState u = ball_sample(rng, 32, 1.0, false);
        const double t = uniform(rng, 0.0, 5.0), s = uniform(rng, 0.0, 5.0);
        worst = std::max(worst, d_s(flow(sys, t + s, u), flow(sys, t, flow(sys, s, u))));
      }
    }
    out.push_back(make("toy semigroup law", worst <= 1e-12, fmt::format("worst l2 gap {:.3e} <= 1e-12", worst)));
  }
  return out;
}

std::vector<CheckResult> run_verification(const VerifyOptions& opt) {
  std::vector<CheckResult> all;
  auto append = [&all](std::vector<CheckResult> part) {
    for (auto& c : part) all.push_back(std::move(c));
  };
  append(algebra_checks(opt));
  append(integration_checks(opt));
  append(oracle_checks(opt));

  VerifyOptions mutant = opt;
  mutant.bilinear = sign_flipped_bilinear(5);
  const bool caught = !algebra_checks(mutant).front().passed;
  all.push_back(make("orthogonality check rejects a sign-flipped B term", caught, "fault injected at mode 5"));

  VerifyOptions tight = opt;
  tight.tolerance_factor = opt.tolerance_factor * 10.0;
  append(integration_checks(tight));
  return all;
}

bool all_passed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

void print_checks(std::ostream& os, const std::vector<CheckResult>& checks) {
  for (const auto& c : checks) os << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
}

int cmd_verify(const CommandOptions& opt, std::ostream& out, std::ostream& log) {
  try {
    VerifyOptions vo;
    vo.seed = opt.seed.value_or(0);
    const std::vector<CheckResult> checks = run_verification(vo);
    print_checks(out, checks);
    const bool ok = all_passed(checks);
    out << (ok ? "verify: all checks passed\n" : "verify: FAILURES present\n");
    return ok ? exit_ok : exit_invariant;
  } catch (const std::exception& e) {
    log << "verify aborted: " << e.what() << '\n';
    return exit_invariant;
  }
}

}  // namespace tns
