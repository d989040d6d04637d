#pragma once

// Monte Carlo estimators for the discounted value functions
//   viability    E int_0^inf e^-t (d_K(X_t) ^ 1) dt
//   invariance   same integrand, read as a lower bound on the sup
//   reach        E int_0^inf -e^-t (d_{O^c}(X_t + u2_t) ^ 1) dt
// and for hitting probabilities. Every estimator evaluates ONE policy, so it
// bounds the optimal value from one side only.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdmpv/geometry.hpp"
#include "pdmpv/pdmp.hpp"

namespace pdmpv {

struct MonteCarloConfig {
  std::size_t paths = 10000;
  double horizon = 30.0;
  std::uint64_t seed = 1;
  SimulationOptions simulation;
  std::optional<std::size_t> threads;
};

enum class BoundKind { UpperBoundOnInf, LowerBoundOnSup, Exact };

struct ValueEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t paths = 0;
  double horizon = 0.0;
  /// e^-T: the integrand is capped at 1, so the neglected tail is at most this.
  double truncation_bound = 0.0;
  BoundKind bound = BoundKind::Exact;

  nlohmann::json to_json() const;
};

/// Additive perturbation u2 of the continuous coordinates, |u2| <= radius.
/// Returned values outside the ball are projected onto it.
struct PerturbationPolicy {
  double radius = 0.0;
  std::function<void(const HybridState& anchor, double elapsed, std::span<double> out)> decide;
  /// The decision depends on the anchor only.
  bool anchor_only = true;

  static PerturbationPolicy none();
  static PerturbationPolicy constant(Vector shift);
};

ValueEstimate estimate_viability_value(const PdmpCharacteristics& chars, const ModeBoxSet& set,
                                       const HybridState& start, const ControlPolicy& policy,
                                       const MonteCarloConfig& config = {});

ValueEstimate estimate_invariance_value(const PdmpCharacteristics& chars, const ModeBoxSet& set,
                                        const HybridState& start, const ControlPolicy& policy,
                                        const MonteCarloConfig& config = {});

/// `target` is read as its open interior O. The perturbed process uses
/// f(x + u2), lambda(x + u2) and kernel targets shifted back by u2.
ValueEstimate estimate_reach_value(const PdmpCharacteristics& chars, const ModeBoxSet& target,
                                   const HybridState& start, const ControlPolicy& policy,
                                   const PerturbationPolicy& perturbation,
                                   const MonteCarloConfig& config = {});

struct HittingEstimate {
  double probability = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
  std::size_t hits = 0;
  std::size_t paths = 0;

  nlohmann::json to_json() const;
};

/// Fraction of paths visiting the open interior of `target` on [0, T], with
/// the Wilson score 95% interval.
HittingEstimate estimate_hitting_probability(const PdmpCharacteristics& chars,
                                             const ModeBoxSet& target, const HybridState& start,
                                             const ControlPolicy& policy,
                                             const MonteCarloConfig& config = {});

/// Wilson score interval for `hits` successes out of `n` at normal quantile z.
std::pair<double, double> wilson_interval(std::size_t hits, std::size_t n, double z = 1.959963984540054);

struct SweepEntry {
  double radius = 0.0;
  ValueEstimate estimate;
  /// |v^eps - v^0| and the 95% interval from paired per-path differences.
  double gap = 0.0;
  double gap_std_error = 0.0;
  double gap_lo = 0.0;
  double gap_hi = 0.0;
};

/// Reach values for strictly decreasing radii ending at 0, all on common
/// random numbers (same master seed, same per-path streams).
std::vector<SweepEntry> convergence_sweep(
    const PdmpCharacteristics& chars, const ModeBoxSet& target, const HybridState& start,
    const ControlPolicy& policy,
    const std::function<PerturbationPolicy(double radius)>& perturbation_for,
    const std::vector<double>& radii, const MonteCarloConfig& config = {});

/// CSV with header `epsilon,mean,std_error,gap`.
void write_sweep_csv(std::ostream& out, const std::vector<SweepEntry>& sweep);

enum class Objective { Minimize, Maximize };

struct PolicySelection {
  std::size_t index = 0;
  ValueEstimate estimate;
  /// Always a one-sided bound: the family is finite.
  std::string note;
};

/// Best estimate over a finite, user-supplied policy family.
PolicySelection best_of_policies(const std::vector<ControlPolicy>& family, Objective objective,
                                 const std::function<ValueEstimate(const ControlPolicy&)>& estimator);

/// Characteristics of the perturbed process. The control vector is
/// [u1 (control_dim entries), u2 (dim entries)].
PdmpCharacteristics perturbed_characteristics(const PdmpCharacteristics& chars,
                                              std::size_t control_dim);

}  // namespace pdmpv
