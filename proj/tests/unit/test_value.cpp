#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "pdmpv/models.hpp"
#include "pdmpv/value.hpp"

using namespace pdmpv;

namespace {

const ControlPolicy kNone = ControlPolicy::uncontrolled();

PdmpCharacteristics frozen(std::size_t modes = 1) {
  PdmpCharacteristics c;
  c.mode_count = modes;
  c.dim = 1;
  c.flow = [](std::size_t, std::span<const double>, std::span<const double>, std::span<double> dx) {
    dx[0] = 0.0;
  };
  c.rate = [](std::size_t, std::span<const double>, std::span<const double>) { return 0.0; };
  c.kernel = [](std::size_t, std::span<const double>, std::span<const double>, std::vector<KernelTarget>&) {};
  return c;
}

// trapezoid rule on e^-t at step 1e-3: relative error h^2 / 12
constexpr double kTrapezoid = 1e-7;

MonteCarloConfig few_paths(double horizon = 30.0) {
  MonteCarloConfig cfg;
  cfg.paths = 8;
  cfg.horizon = horizon;
  return cfg;
}

/// Composite Simpson rule on [0, T].
template <class F>
double simpson(F f, double T, int n = 200000) {
  const double h = T / n;
  double s = f(0.0) + f(T);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("frozen state outside K") {
  const ModeBoxSet k({0}, {0.0}, {1.0});
  const ValueEstimate e = estimate_viability_value(frozen(), k, {0, {1.4}}, kNone, few_paths());
  CHECK(e.mean == doctest::Approx(0.4 * (1.0 - std::exp(-30.0))).epsilon(kTrapezoid));
  CHECK(e.std_error < 1e-15);
  CHECK(e.truncation_bound == doctest::Approx(std::exp(-30.0)));
  CHECK(e.bound == BoundKind::Exact);
  // far away the integrand is capped at 1
  const ValueEstimate far = estimate_viability_value(frozen(), k, {0, {9.0}}, kNone, few_paths(10.0));
  CHECK(far.mean == doctest::Approx(1.0 - std::exp(-10.0)).epsilon(kTrapezoid));
}

TEST_CASE("deterministic decay against quadrature") {
  // mode 0 never switches: x(t) = x0 e^{-kp t}
  OnOffParams p;
  const double kp = 0.8;
  p.r0 = [kp](double x) { return kp * x; };
  p.r1 = [](double) { return 0.0; };
  p.lambda0 = 0.0;
  p.lambda1 = 1.0;
  p.alpha_max = 1.0;
  const auto chars = build_onoff(p);
  const ModeBoxSet k({0, 1}, {0.25}, {0.5});
  const double x0 = 0.95;
  const double T = 20.0;
  const double oracle = simpson(
      [&](double t) { 
        const double x = x0 * std::exp(-kp * t);
        return std::exp(-t) * std::max({0.0, x - 0.5, 0.25 - x});
      }, T);
  const ValueEstimate e = estimate_viability_value(chars, k, {0, {x0}}, kNone, few_paths(T));
  CHECK(std::abs(e.mean - oracle) < 1e-6);
}

TEST_CASE("invariance and viability estimators agree path by path when uncontrolled") {
  const auto chars = build_cook({});
  const ModeBoxSet k({0, 1}, {0.25}, {0.5});
  MonteCarloConfig cfg;
  cfg.paths = 300;
  cfg.horizon = 10.0;
  cfg.seed = 12;
  const ValueEstimate v = estimate_viability_value(chars, k, {1, {0.1}}, kNone, cfg);
  const ValueEstimate w = estimate_invariance_value(chars, k, {1, {0.1}}, kNone, cfg);
  CHECK(v.mean == w.mean);
  CHECK(v.std_error == w.std_error);
  CHECK(v.mean > 0.0);
}

TEST_CASE("estimates do not depend on the thread count") {
  const auto chars = build_cook({});
  const ModeBoxSet k({0, 1}, {0.25}, {0.5});
  MonteCarloConfig cfg;
  cfg.paths = 200;
  cfg.horizon = 5.0;
  cfg.threads = 1;
  const ValueEstimate a = estimate_viability_value(chars, k, {0, {0.9}}, kNone, cfg);
  cfg.threads = 3;
  const ValueEstimate b = estimate_viability_value(chars, k, {0, {0.9}}, kNone, cfg);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("frozen reach value and hitting probability") {
  const ModeBoxSet o({0}, {0.0}, {1.0});
  const ValueEstimate inside =
      estimate_reach_value(frozen(), o, {0, {0.3}}, kNone, PerturbationPolicy::none(), few_paths());
  CHECK(inside.mean == doctest::Approx(-0.3 * (1.0 - std::exp(-30.0))).epsilon(kTrapezoid));
  const ValueEstimate outside =
      estimate_reach_value(frozen(), o, {0, {1.3}}, kNone, PerturbationPolicy::none(), few_paths());
  CHECK(outside.mean == 0.0);
  const ValueEstimate shifted = estimate_reach_value(frozen(), o, {0, {0.3}}, kNone,
                                                     PerturbationPolicy::constant({0.1}), few_paths());
  CHECK(shifted.mean == doctest::Approx(-0.4 * (1.0 - std::exp(-30.0))).epsilon(kTrapezoid));

  CHECK(estimate_hitting_probability(frozen(), o, {0, {0.5}}, kNone, few_paths()).hits == 8);
  const HittingEstimate miss = estimate_hitting_probability(frozen(), o, {0, {1.0}}, kNone, few_paths());
  CHECK(miss.hits == 0);
  CHECK(miss.wilson_lo == 0.0);
}

TEST_CASE("Cook hitting probability of a reachable target") {
  MonteCarloConfig cfg;
  cfg.paths = 500;
  cfg.horizon = 50.0;
  const HittingEstimate h = estimate_hitting_probability(build_cook({}), ModeBoxSet({0, 1}, {0.42}, {0.68}),
                                                         {0, {0.1}}, kNone, cfg);
  CHECK(h.probability > 0.9);
  CHECK(h.wilson_lo > 0.0);
  CHECK(h.wilson_lo <= h.probability);
  CHECK(h.probability <= h.wilson_hi);
}

TEST_CASE("Wilson interval closed forms") {
  const double z = 1.959963984540054;
  auto [lo0, hi0] = wilson_interval(0, 10);
  CHECK(lo0 == doctest::Approx(0.0));
  CHECK(hi0 == doctest::Approx(z * z / (10 + z * z)));
  auto [lo1, hi1] = wilson_interval(10, 10);
  CHECK(lo1 == doctest::Approx(10 / (10 + z * z)));
  CHECK(hi1 == doctest::Approx(1.0));
  // textbook: 5 of 10 gives (0.2366, 0.7634)
  auto [lo, hi] = wilson_interval(5, 10);
  CHECK(lo == doctest::Approx(0.2366).epsilon(1e-3));
  CHECK(hi == doctest::Approx(0.7634).epsilon(1e-3));
}

TEST_CASE("frozen convergence sweep has gap equal to the radius") {
  const ModeBoxSet o({0}, {0.0}, {1.0});
  const std::vector<double> radii{0.2, 0.1, 0.0};
  const auto sweep = convergence_sweep(
      frozen(), o, {0, {0.3}}, kNone,
      [](double r) { return r == 0.0 ? PerturbationPolicy::none() : PerturbationPolicy::constant({r}); },
      radii, few_paths());
  REQUIRE(sweep.size() == 3);
  const double scale = 1.0 - std::exp(-30.0);
  CHECK(sweep[0].gap == doctest::Approx(0.2 * scale).epsilon(kTrapezoid));
  CHECK(sweep[1].gap == doctest::Approx(0.1 * scale).epsilon(kTrapezoid));
  CHECK(sweep[2].gap == 0.0);
  std::ostringstream csv;
  write_sweep_csv(csv, sweep);
  CHECK(csv.str().rfind("epsilon,mean,std_error,gap\n", 0) == 0);
  CHECK_THROWS(convergence_sweep(frozen(), o, {0, {0.3}}, kNone,
                                 [](double) { return PerturbationPolicy::none(); }, {0.1, 0.2, 0.0},
                                 few_paths()));
}

TEST_CASE("best of a policy family is one-sided") {
  const std::vector<ControlPolicy> family{ControlPolicy::constant({1.0}), ControlPolicy::constant({3.0}),
                                          ControlPolicy::constant({2.0})};
  auto fake = [](const ControlPolicy& p) {
    ValueEstimate e;
    e.mean = p.decide({0, {0.0}}, 0.0)[0];
    return e;
  };
  CHECK(best_of_policies(family, Objective::Minimize, fake).index == 0);
  const PolicySelection max = best_of_policies(family, Objective::Maximize, fake);
  CHECK(max.index == 1);
  CHECK_FALSE(max.note.empty());
}
