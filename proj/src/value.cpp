#include "pdmpv/value.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "pdmpv/parallel.hpp"

namespace pdmpv {

namespace {

const char* bound_name(BoundKind kind) {
  switch (kind) {
    case BoundKind::UpperBoundOnInf: return "upper bound on the infimum over controls";
    case BoundKind::LowerBoundOnSup: return "lower bound on the supremum over controls";
    case BoundKind::Exact: return "exact expectation for the supplied policy";
  }
  return "";
}

void check_config(const MonteCarloConfig& config) {
  if (config.paths == 0) throw std::invalid_argument("Monte Carlo needs at least one path");
  if (!(config.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
}

using Integrand = std::function<double(const HybridState&, std::span<const double> control)>;

/// Per-path discounted integrals of the integrand on [0, T]: trapezoid on the
/// step points, both one-sided values kept at each jump.
std::vector<double> path_integrals(const PdmpCharacteristics& chars, const HybridState& start,
                                   const ControlSchedule& schedule,
                                   const MonteCarloConfig& config, const Integrand& integrand) {
  check_config(config);
  std::vector<double> values(config.paths, 0.0);
  parallel_for(config.paths, resolve_threads(config.threads), [&](std::size_t i) {
    CounterRng rng = CounterRng::split(config.seed, i);
    double area = 0.0, prev_t = 0.0, prev_v = 0.0;
    run_path(chars, start, schedule, config.horizon, rng, config.simulation,
             [&](double t, const HybridState& s, std::span<const double> u, PathEvent e) {
               const double v = std::exp(-t) * integrand(s, u);
               if (e == PathEvent::Flow || e == PathEvent::PreJump) {
                 area += 0.5 * (t - prev_t) * (prev_v + v);
               }
               prev_t = t;
               prev_v = v;
               return true;
             });
    values[i] = area;
  });
  return values;
}

ValueEstimate summarize(const std::vector<double>& values, const MonteCarloConfig& config,
                        BoundKind bound) {
  ValueEstimate est;
  const double n = static_cast<double>(values.size());
  est.mean = pairwise_sum(values) / n;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - est.mean) * (values[i] - est.mean);
  est.std_error = values.size() > 1 ? std::sqrt(pairwise_sum(sq) / (n - 1.0) / n) : 0.0;
  est.paths = values.size();
  est.horizon = config.horizon;
  est.truncation_bound = std::exp(-config.horizon);
  est.bound = bound;
  return est;
}

std::size_t control_dim(const ControlPolicy& policy) {
  return policy.control_space().front().size();
}

ControlSchedule combined_schedule(const ControlPolicy& policy,
                                  const PerturbationPolicy& perturbation, std::size_t dim) {
  if (!perturbation.decide) throw std::invalid_argument("perturbation policy needs a decision rule");
  if (!(perturbation.radius >= 0.0)) throw std::invalid_argument("perturbation radius must be >= 0");
  const std::size_t m = control_dim(policy);
  ControlSchedule schedule;
  schedule.anchor_only = policy.is_constant() && perturbation.anchor_only;
  schedule.update = [&policy, &perturbation, m, dim](const HybridState& anchor, double elapsed,
                                                     ControlValue& out) {
    const ControlValue& u1 = policy.decide(anchor, elapsed);
    if (u1.size() != m) throw std::invalid_argument("control values differ in length");
    out.resize(m + dim);
    std::copy(u1.begin(), u1.end(), out.begin());
    std::span<double> u2(out.data() + m, dim);
    perturbation.decide(anchor, elapsed, u2);
    double norm = 0.0;
    for (double v : u2) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > perturbation.radius) {
      const double scale = norm > 0.0 ? perturbation.radius / norm : 0.0;
      for (double& v : u2) v *= scale;
    }
  };
  return schedule;
}

std::vector<double> reach_integrals(const PdmpCharacteristics& chars, const ModeBoxSet& target,
                                    const HybridState& start, const ControlPolicy& policy,
                                    const PerturbationPolicy& perturbation,
                                    const MonteCarloConfig& config) {
  const std::size_t n = chars.dim;
  const std::size_t m = control_dim(policy);
  const PdmpCharacteristics perturbed = perturbed_characteristics(chars, m);
  const ControlSchedule schedule = combined_schedule(policy, perturbation, n);
  return path_integrals(perturbed, start, schedule, config,
                        [&target, m, n](const HybridState& s, std::span<const double> u) {
                          thread_local Vector shifted;
                          shifted.resize(n);
                          for (std::size_t i = 0; i < n; ++i) shifted[i] = s.x[i] + u[m + i];
                          return -target.capped_distance_to_complement(s.mode, shifted);
                        });
}

}  // namespace

nlohmann::json ValueEstimate::to_json() const {
  return {{"mean", mean},
          {"std_error", std_error},
          {"paths", paths},
          {"horizon", horizon},
          {"truncation_bound", truncation_bound},
          {"bound", bound_name(bound)}};
}

PerturbationPolicy PerturbationPolicy::none() {
  PerturbationPolicy p;
  p.radius = 0.0;
  p.decide = [](const HybridState&, double, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  return p;
}

PerturbationPolicy PerturbationPolicy::constant(Vector shift) {
  PerturbationPolicy p;
  double norm = 0.0;
  for (double v : shift) norm += v * v;
  p.radius = std::sqrt(norm);
  p.decide = [shift = std::move(shift)](const HybridState&, double, std::span<double> out) {
    if (out.size() != shift.size()) throw std::invalid_argument("perturbation has the wrong dimension");
    std::copy(shift.begin(), shift.end(), out.begin());
  };
  return p;
}

PdmpCharacteristics perturbed_characteristics(const PdmpCharacteristics& chars,
                                              std::size_t control_dim) {
  const std::size_t n = chars.dim;
  const std::size_t m = control_dim;
  PdmpCharacteristics out = chars;
  auto base = std::make_shared<PdmpCharacteristics>(chars);
  out.flow = [base, n, m](std::size_t mode, std::span<const double> x, std::span<const double> u,
                          std::span<double> dx) {
    thread_local Vector y;
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + u[m + i];
    base->flow(mode, y, u.first(m), dx);
  };
  out.rate = [base, n, m](std::size_t mode, std::span<const double> x, std::span<const double> u) {
    thread_local Vector y;
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + u[m + i];
    return base->rate(mode, y, u.first(m));
  };
  out.kernel = [base, n, m](std::size_t mode, std::span<const double> x, std::span<const double> u,
                            std::vector<KernelTarget>& targets) {
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + u[m + i];
    const std::size_t first = targets.size();
    base->kernel(mode, y, u.first(m), targets);
    for (std::size_t k = first; k < targets.size(); ++k) {
      for (std::size_t i = 0; i < n; ++i) targets[k].target.x[i] -= u[m + i];
    }
  };
  return out;
}

ValueEstimate estimate_viability_value(const PdmpCharacteristics& chars, const ModeBoxSet& set,
                                       const HybridState& start, const ControlPolicy& policy,
                                       const MonteCarloConfig& config) {
  const ControlSchedule schedule = ControlSchedule::from(policy);
  const auto values = path_integrals(chars, start, schedule, config,
                                     [&set](const HybridState& s, std::span<const double>) {
                                       return set.capped_distance(s.mode, s.x);
                                     });
  return summarize(values, config,
                   policy.is_constant() ? BoundKind::Exact : BoundKind::UpperBoundOnInf);
}

ValueEstimate estimate_invariance_value(const PdmpCharacteristics& chars, const ModeBoxSet& set,
                                        const HybridState& start, const ControlPolicy& policy,
                                        const MonteCarloConfig& config) {
  ValueEstimate est = estimate_viability_value(chars, set, start, policy, config);
  est.bound = policy.is_constant() ? BoundKind::Exact : BoundKind::LowerBoundOnSup;
  return est;
}

ValueEstimate estimate_reach_value(const PdmpCharacteristics& chars, const ModeBoxSet& target,
                                   const HybridState& start, const ControlPolicy& policy,
                                   const PerturbationPolicy& perturbation,
                                   const MonteCarloConfig& config) {
  const auto values = reach_integrals(chars, target, start, policy, perturbation, config);
  const bool exact = policy.is_constant() && perturbation.radius == 0.0;
  return summarize(values, config, exact ? BoundKind::Exact : BoundKind::UpperBoundOnInf);
}

std::pair<double, double> wilson_interval(std::size_t hits, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

HittingEstimate estimate_hitting_probability(const PdmpCharacteristics& chars,
                                             const ModeBoxSet& target, const HybridState& start,
                                             const ControlPolicy& policy,
                                             const MonteCarloConfig& config) {
  check_config(config);
  const ControlSchedule schedule = ControlSchedule::from(policy);
  std::vector<double> hit(config.paths, 0.0);
  parallel_for(config.paths, resolve_threads(config.threads), [&](std::size_t i) {
    CounterRng rng = CounterRng::split(config.seed, i);
    run_path(chars, start, schedule, config.horizon, rng, config.simulation,
             [&](double, const HybridState& s, std::span<const double>, PathEvent) {
               if (target.interior_contains(s)) {
                 hit[i] = 1.0;
                 return false;
               }
               return true;
             });
  });
  HittingEstimate est;
  est.paths = config.paths;
  est.hits = static_cast<std::size_t>(pairwise_sum(hit));
  est.probability = static_cast<double>(est.hits) / static_cast<double>(est.paths);
  std::tie(est.wilson_lo, est.wilson_hi) = wilson_interval(est.hits, est.paths);
  return est;
}

nlohmann::json HittingEstimate::to_json() const {
  return {{"probability", probability},
          {"wilson_lo", wilson_lo},
          {"wilson_hi", wilson_hi},
          {"hits", hits},
          {"paths", paths},
          {"interval", "Wilson score, 95%"}};
}

std::vector<SweepEntry> convergence_sweep(
    const PdmpCharacteristics& chars, const ModeBoxSet& target, const HybridState& start,
    const ControlPolicy& policy,
    const std::function<PerturbationPolicy(double radius)>& perturbation_for,
    const std::vector<double>& radii, const MonteCarloConfig& config) {
  if (radii.empty() || radii.back() != 0.0) {
    throw std::invalid_argument("sweep radii must end at 0");
  }
  for (std::size_t k = 1; k < radii.size(); ++k) {
    if (!(radii[k] < radii[k - 1])) throw std::invalid_argument("sweep radii must strictly decrease");
  }
  std::vector<std::vector<double>> per_path;
  std::vector<SweepEntry> sweep;
  for (double r : radii) {
    const PerturbationPolicy perturbation = perturbation_for(r);
    if (perturbation.radius > r * (1.0 + 1e-12)) {
      throw std::invalid_argument("perturbation radius exceeds the sweep radius");
    }
    per_path.push_back(reach_integrals(chars, target, start, policy, perturbation, config));
    SweepEntry e;
    e.radius = r;
    const bool exact = policy.is_constant() && r == 0.0;
    e.estimate = summarize(per_path.back(), config,
                           exact ? BoundKind::Exact : BoundKind::UpperBoundOnInf);
    sweep.push_back(e);
  }
  const auto& base = per_path.back();
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    std::vector<double> diff(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) diff[i] = per_path[k][i] - base[i];
    const ValueEstimate d = summarize(diff, config, BoundKind::Exact);
    sweep[k].gap = std::abs(d.mean);
    sweep[k].gap_std_error = d.std_error;
    sweep[k].gap_lo = std::max(0.0, sweep[k].gap - 1.959963984540054 * d.std_error);
    sweep[k].gap_hi = sweep[k].gap + 1.959963984540054 * d.std_error;
  }
  return sweep;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepEntry>& sweep) {
  out << "epsilon,mean,std_error,gap\n";
  for (const auto& e : sweep) {
    out << format_double(e.radius) << ',' << format_double(e.estimate.mean) << ','
        << format_double(e.estimate.std_error) << ',' << format_double(e.gap) << '\n';
  }
}

PolicySelection best_of_policies(const std::vector<ControlPolicy>& family, Objective objective,
                                 const std::function<ValueEstimate(const ControlPolicy&)>& estimator) {
  if (family.empty()) throw std::invalid_argument("policy family is empty");
  PolicySelection best;
  for (std::size_t k = 0; k < family.size(); ++k) {
    ValueEstimate est = estimator(family[k]);
    const bool better = k == 0 || (objective == Objective::Minimize ? est.mean < best.estimate.mean
                                                                    : est.mean > best.estimate.mean);
    if (better) {
      best.index = k;
      best.estimate = est;
    }
  }
  best.estimate.bound =
      objective == Objective::Minimize ? BoundKind::UpperBoundOnInf : BoundKind::LowerBoundOnSup;
  best.note = "best over a finite policy family: a one-sided bound on the optimal value";
  return best;
}

}  // namespace pdmpv
