// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 3 5        run criteria 3 and 5 only
//
// Oracles live in this file and do not call the code under test: closed-form
// flows, the closed-form normal-cone table of K_eps, Kolmogorov-Smirnov
// statistics and frozen-state values.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pdmpv/geometry.hpp"
#include "pdmpv/hjb.hpp"
#include "pdmpv/models.hpp"
#include "pdmpv/parallel.hpp"
#include "pdmpv/pdmp.hpp"
#include "pdmpv/value.hpp"

using namespace pdmpv;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const CookParams kCook{};  // ka=1, kd=1.5, Jp=0.8, kp=0.8, alpha_max=1
const PhageParams kPhage{};
const ControlPolicy kNone = ControlPolicy::uncontrolled();

// ---------------------------------------------------------------------------
// 1. Cook invariance

Result criterion_cook_invariance() {
  const auto chars = build_cook(kCook);
  const ModeBoxSet k = kCook.invariant_set();
  const std::size_t paths = 10000;
  const double horizon = 100.0;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> worst(paths, 0.0);
  const auto schedule = ControlSchedule::from(kNone);
  parallel_for(paths, resolve_threads(), [&](std::size_t i) {
    CounterRng rng = CounterRng::split(101, i);
    HybridState start{static_cast<std::size_t>(rng() % 2), {kCook.alpha_max() * rng.uniform()}};
    double w = 0.0;
    run_path(chars, start, schedule, horizon, rng, {},
             [&](double, const HybridState& s, std::span<const double>, PathEvent) {
               w = std::max(w, k.capped_distance(s));
               return true;
             });
    worst[i] = w;
  });
  const double elapsed = seconds_since(t0);
  const double max_d = *std::max_element(worst.begin(), worst.end());
  const CheckReport check = check_invariance(chars, k);
  const bool pass = max_d <= 1e-6 && check.pass && elapsed <= 60.0;
  return {pass, "max capped distance " + fmt(max_d) + " (<= 1e-6), check_invariance " +
                    (check.pass ? "pass" : "fail") + ", " + fmt(elapsed) + " s on " +
                    std::to_string(resolve_threads()) + " thread(s) (<= 60 s)"};
}

// ---------------------------------------------------------------------------
// 2. Invariance iff r0(a) = 0 and r1(b) = 0

double oracle_r0(double x) { return std::max(0.0, x - 0.3); }
double oracle_r1(double x) { return std::max(0.0, 0.7 - x); }

OnOffParams flat_onoff() {
  OnOffParams p;
  const PiecewiseLinear r0({0.0, 0.3, 1.0}, {0.0, 0.0, 0.7});
  const PiecewiseLinear r1({0.0, 0.7, 1.0}, {0.7, 0.0, 0.0});
  p.r0 = r0;
  p.r1 = r1;
  p.lambda0 = 1.0;
  p.lambda1 = 1.0;
  p.alpha_max = 1.0;
  return p;
}

Result criterion_iff() {
  const auto chars = build_onoff(flat_onoff());
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int disagreements = 0, uncorroborated = 0, passes = 0, fails = 0;
  for (int trial = 0; trial < 100; ++trial) {
    double a = unit(gen), b = unit(gen);
    if (a > b) std::swap(a, b);
    const bool expected = oracle_r0(a) <= 1e-9 && oracle_r1(b) <= 1e-9;
    const CheckReport r = check_invariance(chars, ModeBoxSet({0, 1}, {a}, {b}));
    if (r.pass != expected) ++disagreements;
    (r.pass ? passes : fails)++;
    if (!r.pass) {
      // the violation must sit on a face with outward flow per the oracle
      const auto& w = *r.worst;
      const double x = w.point[0];
      const double f = w.mode == 0 ? -oracle_r0(x) : oracle_r1(x);
      const bool on_face = (x == a && w.direction[0] == -1.0) || (x == b && w.direction[0] == 1.0);
      if (!on_face || !(w.direction[0] * f > 1e-9)) ++uncorroborated;
    }
  }
  return {disagreements == 0 && uncorroborated == 0,
          std::to_string(passes) + " pass / " + std::to_string(fails) + " fail boxes, " +
              std::to_string(disagreements) + " disagreements, " + std::to_string(uncorroborated) +
              " fails without flow-sign corroboration"};
}

// ---------------------------------------------------------------------------
// 3. Phage K_eps invariance

/// <p, f> from the closed-form normal-cone table of K_eps. Each axis
/// position is 0 (lower face), 1 (open interval), 2 (upper face).
double table_value(int c1, int c2, const Vector& p, double x1, double x2, double eps) {
  const double k1 = kPhage.k1, km1 = kPhage.k_1, kd = kPhage.kd;
  const double q = 8.0 * k1 * km1 * km1 / (kd * kd) * eps * eps;
  if (c1 == 0 && c2 == 0) return 0.0;
  if (c1 == 0 && c2 == 1) return 2.0 * p[0] * km1 * x2;
  if (c1 == 0 && c2 == 2) return (2.0 * p[0] - p[1]) * km1 * eps;
  if (c1 == 1 && c2 == 0) return p[1] * k1 * x1 * x1;
  if (c1 == 1 && c2 == 1) return 0.0;
  if (c1 == 1 && c2 == 2) return p[1] * (k1 * x1 * x1 - km1 * eps);
  if (c1 == 2 && c2 == 0) return -p[0] * (q + 2.0 * km1 * eps) + p[1] * q / 2.0;
  if (c1 == 2 && c2 == 1) return -p[0] * (q + 2.0 * km1 * eps - 2.0 * km1 * x2);
  return -p[0] * q + p[1] * km1 * eps * (4.0 * k1 * km1 / (kd * kd) * eps - 1.0);
}

Result criterion_phage() {
  const auto chars = build_phage(kPhage);
  const double eps_max = kPhage.epsilon_max();
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t trajectories = 0, jumpy = 0, escaped = 0, table_mismatch = 0, positive = 0;
  bool checks_pass = true;
  double worst_distance = 0.0;
  std::set<int> cases_seen;
  for (int trial = 0; trial < 20; ++trial) {
    const double eps = eps_max * (0.02 + 0.96 * unit(gen));
    const ModeBoxSet k = kPhage.k_epsilon(eps);
    for (int s = 0; s < 10; ++s) {
      const HybridState start{0, {k.hi()[0] * unit(gen), eps * unit(gen)}};
      const Trajectory tr = simulate(chars, start, kNone, 30.0, 1000 * trial + s);
      ++trajectories;
      if (!tr.jumps.empty()) ++jumpy;
      double d = 0.0;
      for (const auto& seg : tr.segments) {
        for (const auto& p : seg.points) d = std::max(d, k.capped_distance(seg.anchor.mode, p.x));
      }
      worst_distance = std::max(worst_distance, d);
      if (d > 1e-6) ++escaped;
    }
    CheckResolution res;
    res.density = 33;
    if (!check_invariance(chars, k, res).pass) checks_pass = false;
    // every lattice point, classified into the nine table cases
    for (int i = 0; i < 33; ++i) {
      for (int j = 0; j < 33; ++j) {
        const double x1 = k.hi()[0] * i / 32.0, x2 = eps * j / 32.0;
        const int c1 = i == 0 ? 0 : (i == 32 ? 2 : 1);
        const int c2 = j == 0 ? 0 : (j == 32 ? 2 : 1);
        cases_seen.insert(3 * c1 + c2);
        const HybridState s{0, {i == 32 ? k.hi()[0] : x1, j == 32 ? eps : x2}};
        const Vector f = chars.flow_at(s);
        const NormalCone cone = normal_cone(k, s);
        std::vector<Vector> gens = cone.generators;
        if (gens.empty()) gens.push_back({0.0, 0.0});
        for (const Vector& p : gens) {
          const double lib = p[0] * f[0] + p[1] * f[1];
          const double oracle = table_value(c1, c2, p, s.x[0], s.x[1], eps);
          if (std::abs(lib - oracle) > 1e-12) ++table_mismatch;
          if (lib > 1e-12) ++positive;
        }
      }
    }
  }
  const bool pass = jumpy == 0 && escaped == 0 && checks_pass && table_mismatch == 0 &&
                    positive == 0 && cases_seen.size() == 9;
  return {pass, std::to_string(trajectories) + " trajectories, " + std::to_string(jumpy) +
                    " with jumps, max distance " + fmt(worst_distance) + "; check_invariance " +
                    (checks_pass ? "pass" : "fail") + " for 20 eps; " +
                    std::to_string(cases_seen.size()) + "/9 table cases, " +
                    std::to_string(table_mismatch) + " mismatches, " + std::to_string(positive) +
                    " positive <p,f>"};
}

// ---------------------------------------------------------------------------
// 4. v_inv vanishes on K

Result criterion_vinv() {
  const auto chars = build_cook(kCook);
  const ModeBoxSet k = kCook.invariant_set();
  MonteCarloConfig cfg;
  cfg.paths = 10000;
  cfg.horizon = 30.0;
  cfg.seed = 404;
  bool pass = true;
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const HybridState start{static_cast<std::size_t>(i % 2), {0.05 + 0.1 * i}};
    const ValueEstimate e = estimate_invariance_value(chars, k, start, kNone, cfg);
    const double bound = 3.0 * e.std_error + std::exp(-30.0) + 1e-6;
    worst = std::max(worst, std::abs(e.mean));
    if (!(std::abs(e.mean) <= bound)) pass = false;
  }
  return {pass, "max |estimate| " + fmt(worst) + " over 10 probes (bound 3 se + e^-30 + 1e-6)"};
}

// ---------------------------------------------------------------------------
// 5. HJB vs Monte Carlo, and 9. numerical stability share these

const ModeBoxSet kPrime({0, 1}, {0.25}, {0.5});

std::vector<HybridState> hjb_probes() {
  std::vector<HybridState> out;
  for (double x : {0.1, 0.3, 0.45, 0.6, 0.85}) {
    out.push_back({0, {x}});
    out.push_back({1, {x}});
  }
  return out;
}

RunningCost kprime_cost() {
  return [](const HybridState& s) { return kPrime.capped_distance(s); };
}

SolveResult solve_kprime(std::size_t nodes, double h, double fill) {
  SolveOptions o;
  o.step = h;
  o.tolerance = 1e-8;
  o.initial_fill = fill;
  return solve_discounted(build_cook(kCook), kprime_cost(), Optimize::Min,
                          GridSpec::uniform(kCook.invariant_set(), nodes), o);
}

std::map<int, ValueEstimate> g_mc30;

Result criterion_hjb_mc() {
  const auto chars = build_cook(kCook);
  const SolveResult zero = solve_kprime(129, 0.01, 0.0);
  const SolveResult ones = solve_kprime(129, 0.01, 1.0);
  double agree = 0.0;
  for (std::size_t k = 0; k < zero.value.size(); ++k) {
    agree = std::max(agree, std::abs(zero.value.values()[k] - ones.value.values()[k]));
  }
  const double bound = std::log(2.0 / 1e-8) / 0.01;
  const bool iter_ok = zero.report.iterations <= bound && ones.report.iterations <= bound;
  const double contraction = std::max(zero.report.contraction_estimate, ones.report.contraction_estimate);
  const bool contraction_ok = contraction <= std::exp(-0.01) + 1e-12;
  MonteCarloConfig cfg;
  cfg.paths = 10000;
  cfg.horizon = 30.0;
  cfg.seed = 505;
  const auto probes = hjb_probes();
  double worst_excess = -1.0, worst_gap = 0.0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    // uncontrolled model: the solved feedback is the single control
    const ValueEstimate e = estimate_viability_value(chars, kPrime, probes[i], kNone, cfg);
    g_mc30[static_cast<int>(i)] = e;
    const double gap = std::abs(e.mean - zero.value.interpolate(probes[i]));
    worst_gap = std::max(worst_gap, gap);
    worst_excess = std::max(worst_excess, gap - std::max(0.02, 3.0 * e.std_error));
  }
  const bool pass = worst_excess <= 0.0 && iter_ok && contraction_ok && agree <= 2e-8;
  return {pass, "max |v_hjb - v_mc| " + fmt(worst_gap) + " (<= max(0.02, 3 se)); iterations " +
                    std::to_string(zero.report.iterations) + "/" + std::to_string(ones.report.iterations) +
                    " (<= " + fmt(bound) + "); contraction " + fmt(contraction) + " vs e^-h " +
                    fmt(std::exp(-0.01)) + "; zero/ones init gap " + fmt(agree) + " (<= 2e-8)"};
}

// ---------------------------------------------------------------------------
// 6. Reachability

Result criterion_reach() {
  const auto chars = build_cook(kCook);
  std::mt19937_64 gen(606);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const GridSpec grid = GridSpec::uniform(kCook.invariant_set(), 129);
  int ok = 0;
  std::string failures;
  double worst_dual_excess = -1.0, worst_smoothed = 0.0, max_v0 = -1.0, min_wilson = 1.0;
  for (int trial = 0; trial < 10; ++trial) {
    const double a = 0.05 + 0.6 * unit(gen);
    const double b = a + 0.1 + 0.2 * unit(gen);
    const double x0 = 0.02 + 0.96 * unit(gen);
    const ModeBoxSet target({0, 1}, {a}, {b});
    const HybridState start{0, {x0}};
    ReachOptions opts;
    opts.audit_seed = 6000 + trial;
    MonteCarloConfig mc;
    mc.paths = 10000;
    mc.horizon = 100.0;
    mc.seed = 616 + trial;
    opts.monte_carlo = mc;
    const ReachDecision d = decide_reachability(chars, target, start, grid, opts);
    const bool hit = d.hitting->wilson_lo > 0.0;
    const bool v0 = d.value < -1e-3;
    const bool weak = d.audit.max_random_mu <= d.value + 0.02;
    const bool strong = std::abs(d.audit.smoothed_mu - d.value) <= 0.02;
    worst_dual_excess = std::max(worst_dual_excess, d.audit.max_random_mu - d.value);
    worst_smoothed = std::max(worst_smoothed, std::abs(d.audit.smoothed_mu - d.value));
    max_v0 = std::max(max_v0, d.value);
    min_wilson = std::min(min_wilson, d.hitting->wilson_lo);
    if (hit && v0 && weak && strong && d.reachable) {
      ++ok;
    } else {
      failures += " [a=" + fmt(a) + " b=" + fmt(b) + " x0=" + fmt(x0) + ": hit " + (hit ? "y" : "n") +
                  " v0 " + fmt(d.value) + " weak " + (weak ? "y" : "n") + " smoothed mu " +
                  fmt(d.audit.smoothed_mu) + "]";
    }
  }
  return {ok == 10, std::to_string(ok) + "/10 instances; min Wilson lower " + fmt(min_wilson) +
                        ", max v0 " + fmt(max_v0) + " (< -1e-3), max mu - v0 " +
                        fmt(worst_dual_excess) + " (<= 0.02), max |mu_smoothed - v0| " +
                        fmt(worst_smoothed) + " (<= 0.02)" + failures};
}

// ---------------------------------------------------------------------------
// 7. Jump-law exactness

/// Two-sided KS statistic of a sample against the Exponential(rate) CDF.
double ks_exponential(std::vector<double> xs, double rate) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = 1.0 - std::exp(-rate * xs[i]);
    d = std::max({d, (i + 1) / n - F, F - i / n});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

Result criterion_jump_law() {
  const double rate = 2.0;
  PdmpCharacteristics c;
  c.mode_count = 1;
  c.dim = 1;
  c.rate_bound = rate;
  c.flow = [](std::size_t, std::span<const double> x, std::span<const double>, std::span<double> dx) {
    dx[0] = -x[0];
  };
  c.rate = [rate](std::size_t, std::span<const double>, std::span<const double>) { return rate; };
  c.kernel = [](std::size_t, std::span<const double> x, std::span<const double>,
                std::vector<KernelTarget>& out) { out.push_back({1.0, {0, {x[0] + 1.0}}}); };
  const std::size_t n = 100000;
  std::vector<double> hazard(n), thinning(n);
  const HybridState start{0, {1.0}};
  parallel_for(n, resolve_threads(), [&](std::size_t i) {
    CounterRng r1 = CounterRng::split(707, i);
    hazard[i] = *sample_jump_time(c, start, kNone, r1, 1e3).time;
    CounterRng r2 = CounterRng::split(708, i);
    thinning[i] = *sample_jump_time_thinning(c, start, kNone, r2, 1e3).time;
  });
  const double d1 = ks_exponential(hazard, rate);
  const double crit1 = 1.36 / std::sqrt(static_cast<double>(n));
  const double d2 = ks_two_sample(hazard, thinning);
  const double crit2 = 1.36 * std::sqrt(2.0 / static_cast<double>(n));
  return {d1 < crit1 && d2 < crit2, "KS vs Exp(2) " + fmt(d1) + " (< " + fmt(crit1) +
                                        "), two-sample KS hazard vs thinning " + fmt(d2) +
                                        " (< " + fmt(crit2) + ")"};
}

// ---------------------------------------------------------------------------
// 8. v^eps convergence

Result criterion_sweep() {
  const auto chars = build_cook(kCook);
  const ModeBoxSet target({0, 1}, {0.42}, {0.68});
  const HybridState start{0, {0.3}};
  const std::vector<double> radii{0.2, 0.1, 0.05, 0.025, 0.0};
  auto shift = [](double r) { return r == 0.0 ? PerturbationPolicy::none() : PerturbationPolicy::constant({r}); };
  MonteCarloConfig cfg;
  cfg.paths = 10000;
  cfg.horizon = 30.0;
  cfg.seed = 808;
  const auto sweep = convergence_sweep(chars, target, start, kNone, shift, radii, cfg);
  bool monotone = true;
  std::string gaps;
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    gaps += (k ? ", " : "") + fmt(sweep[k].gap);
    if (k > 0 && sweep[k].gap > sweep[k - 1].gap && sweep[k].gap_lo > sweep[k - 1].gap_hi) {
      monotone = false;
    }
  }
  // frozen dynamics: gap = eps exactly, by the closed form d_{O^c}(x + eps) - d_{O^c}(x)
  PdmpCharacteristics frozen;
  frozen.mode_count = 1;
  frozen.dim = 1;
  frozen.flow = [](std::size_t, std::span<const double>, std::span<const double>, std::span<double> dx) {
    dx[0] = 0.0;
  };
  frozen.rate = [](std::size_t, std::span<const double>, std::span<const double>) { return 0.0; };
  frozen.kernel = [](std::size_t, std::span<const double>, std::span<const double>,
                     std::vector<KernelTarget>&) {};
  MonteCarloConfig fc;
  fc.paths = 4;
  fc.horizon = 30.0;
  const auto fs = convergence_sweep(frozen, ModeBoxSet({0}, {0.0}, {1.0}), {0, {0.3}}, kNone, shift,
                                    radii, fc);
  double frozen_err = 0.0;
  for (const auto& e : fs) frozen_err = std::max(frozen_err, std::abs(e.gap - e.radius));
  return {monotone && frozen_err <= 1e-6,
          "gaps [" + gaps + "] non-increasing up to overlapping 95% CIs: " + (monotone ? "yes" : "no") +
              "; frozen sweep max |gap - eps| " + fmt(frozen_err) + " (<= 1e-6)"};
}

// ---------------------------------------------------------------------------
// 9. Numerical stability

Result criterion_stability() {
  const auto chars = build_cook(kCook);
  const auto probes = hjb_probes();
  MonteCarloConfig c30;
  c30.paths = 10000;
  c30.horizon = 30.0;
  c30.seed = 505;
  MonteCarloConfig c60 = c30;
  c60.horizon = 60.0;
  double worst_t = -1.0;
  for (int i = 0; i < static_cast<int>(probes.size()); ++i) {
    if (!g_mc30.count(i)) g_mc30[i] = estimate_viability_value(chars, kPrime, probes[i], kNone, c30);
    const ValueEstimate& a = g_mc30[i];
    const ValueEstimate b = estimate_viability_value(chars, kPrime, probes[i], kNone, c60);
    const double se = std::max(a.std_error, b.std_error);
    worst_t = std::max(worst_t, std::abs(a.mean - b.mean) - (std::exp(-30.0) + 3.0 * se));
  }
  const SolveResult coarse = solve_kprime(129, 0.01, 0.0);
  const SolveResult fine = solve_kprime(257, 0.005, 0.0);
  double worst_grid = 0.0;
  for (const auto& p : probes) {
    worst_grid = std::max(worst_grid, std::abs(coarse.value.interpolate(p) - fine.value.interpolate(p)));
  }
  return {worst_t <= 0.0 && worst_grid <= 0.01,
          "T 30 -> 60: max excess over e^-30 + 3 se " + fmt(worst_t) + " (<= 0); h/2 and 2x nodes: " +
              "max probe change " + fmt(worst_grid) + " (<= 0.01)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Result()>>> criteria{
      {"Cook invariance", criterion_cook_invariance},
      {"invariance iff-condition", criterion_iff},
      {"phage K_eps invariance", criterion_phage},
      {"v_inv vanishes on invariant sets", criterion_vinv},
      {"HJB vs Monte Carlo consistency", criterion_hjb_mc},
      {"reachability", criterion_reach},
      {"jump-law exactness", criterion_jump_law},
      {"v^eps convergence", criterion_sweep},
      {"numerical stability", criterion_stability},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = criteria[k].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    if (!r.pass) ++failed;
    std::printf("%s  criterion %d [PRIMARY] %s: %s (%.1f s)\n", r.pass ? "PASS" : "FAIL", id,
                criteria[k].first, r.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
