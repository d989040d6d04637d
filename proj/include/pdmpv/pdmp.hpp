#pragma once

// Controlled piecewise deterministic Markov processes: local characteristics,
// control policies, and exact trajectory simulation (deterministic flow
// between jumps, jump times by integrated-hazard inversion, post-jump states
// drawn from a finite-support kernel).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdmpv/rng.hpp"

namespace pdmpv {

using Vector = std::vector<double>;
using ControlValue = std::vector<double>;

/// A discrete mode plus a continuous vector.
struct HybridState {
  std::size_t mode = 0;
  Vector x;

  friend bool operator==(const HybridState&, const HybridState&) = default;
};

struct KernelTarget {
  double weight = 0.0;
  HybridState target;
};

using FlowFn = std::function<void(std::size_t mode, std::span<const double> x,
                                  std::span<const double> u,
                                  std::span<double> dx)>;
using RateFn = std::function<double(std::size_t mode, std::span<const double> x,
                                    std::span<const double> u)>;
/// Appends the post-jump distribution at (mode, x, u) to `out`. Only called
/// where the rate is positive.
using KernelFn = std::function<void(std::size_t mode, std::span<const double> x,
                                    std::span<const double> u,
                                    std::vector<KernelTarget>& out)>;

/// Local characteristics (f, lambda, Q) of a controlled PDMP in hybrid form.
struct PdmpCharacteristics {
  std::size_t mode_count = 1;
  std::size_t dim = 1;
  /// Declared global bound on the jump rate.
  double rate_bound = 0.0;
  /// Declared bound on the jump displacement |target - source| (hybrid
  /// coordinates embedded in R^N), when known exactly.
  std::optional<double> jump_radius;
  /// The rate depends on the mode only; the integrator then evaluates it
  /// once per step.
  bool rate_depends_on_mode_only = false;
  FlowFn flow;
  RateFn rate;
  KernelFn kernel;

  Vector flow_at(const HybridState& s, std::span<const double> u = {}) const;
  double rate_at(const HybridState& s, std::span<const double> u = {}) const;
  std::vector<KernelTarget> kernel_at(const HybridState& s,
                                      std::span<const double> u = {}) const;
};

/// Policy over a finite control grid. The decision sees only the last
/// post-jump location (the anchor) and the time elapsed since that jump.
class ControlPolicy {
 public:
  using Decide = std::function<std::size_t(const HybridState& anchor, double elapsed)>;

  ControlPolicy(std::vector<ControlValue> control_space, Decide decide);

  /// Singleton control space holding the empty control.
  static ControlPolicy uncontrolled();
  /// Singleton control space holding `u`.
  static ControlPolicy constant(ControlValue u);

  const std::vector<ControlValue>& control_space() const { return space_; }
  /// Throws std::out_of_range if the decision rule leaves the control space.
  const ControlValue& decide(const HybridState& anchor, double elapsed) const;
  bool is_constant() const { return space_.size() == 1; }

 private:
  std::vector<ControlValue> space_;
  Decide decide_;
};

/// Control feed for the integrator. `update` writes the control to apply at
/// (anchor, elapsed). When `anchor_only` is set it is called once per
/// segment instead of once per integration step.
struct ControlSchedule {
  std::function<void(const HybridState& anchor, double elapsed, ControlValue& out)> update;
  bool anchor_only = false;

  static ControlSchedule from(const ControlPolicy& policy);
};

struct SimulationOptions {
  /// Fixed RK4 step (model time units).
  double step = 1e-3;
};

enum class PathEvent { Start, Flow, PreJump, PostJump };

/// Called at every recorded point. Returning false stops the path.
using PathObserver = std::function<bool(double t, const HybridState& s,
                                        std::span<const double> control,
                                        PathEvent event)>;

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, HybridState state)
      : std::runtime_error(what), state_(std::move(state)) {}
  const HybridState& state() const noexcept { return state_; }

 private:
  HybridState state_;
};

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// One classical RK4 step of the frozen-control vector field.
HybridState flow_step(const PdmpCharacteristics& chars, const HybridState& state,
                      std::span<const double> control, double h);

struct JumpTimeSample {
  /// Jump time measured from the anchor, or nullopt if none before t_max.
  std::optional<double> time;
  /// Pre-jump state, or the flow endpoint at t_max.
  HybridState state;
};

/// First jump time from `anchor` by inversion of the integrated hazard. The
/// hazard is integrated alongside the flow; a crossing inside a step is
/// refined by bisection to 1e-10 * (1 + t).
JumpTimeSample sample_jump_time(const PdmpCharacteristics& chars,
                                const HybridState& anchor,
                                const ControlPolicy& policy, CounterRng& rng,
                                double t_max, const SimulationOptions& options = {});

/// Draws a kernel target by inverse CDF. Rate zero is a contract violation.
HybridState sample_post_jump(const PdmpCharacteristics& chars,
                             const HybridState& pre_state,
                             std::span<const double> control, CounterRng& rng);

struct PathPoint {
  double t = 0.0;
  Vector x;
};

struct TrajectorySegment {
  double start_time = 0.0;
  HybridState anchor;
  std::vector<PathPoint> points;
};

struct JumpRecord {
  double time = 0.0;
  HybridState pre;
  HybridState post;
};

struct Trajectory {
  std::vector<TrajectorySegment> segments;
  std::vector<JumpRecord> jumps;
  std::uint64_t seed = 0;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

inline bool operator==(const PathPoint& a, const PathPoint& b) {
  return a.t == b.t && a.x == b.x;
}
inline bool operator==(const TrajectorySegment& a, const TrajectorySegment& b) {
  return a.start_time == b.start_time && a.anchor == b.anchor && a.points == b.points;
}
inline bool operator==(const JumpRecord& a, const JumpRecord& b) {
  return a.time == b.time && a.pre == b.pre && a.post == b.post;
}

struct PathSummary {
  std::size_t jumps = 0;
  double end_time = 0.0;
  HybridState end_state;
  bool stopped_early = false;
};

/// Streams one path on [0, horizon] through `observer`. This is the engine
/// behind `simulate` and every Monte Carlo estimator.
PathSummary run_path(const PdmpCharacteristics& chars, const HybridState& start,
                     const ControlSchedule& schedule, double horizon,
                     CounterRng& rng, const SimulationOptions& options,
                     const PathObserver& observer);

/// Full trajectory on [0, horizon], every integration step recorded.
/// Deterministic in (inputs, seed).
Trajectory simulate(const PdmpCharacteristics& chars, const HybridState& start,
                    const ControlPolicy& policy, double horizon,
                    std::uint64_t seed, const SimulationOptions& options = {});

/// Thinning sampler: candidate times from a Poisson clock of intensity
/// `rate_bound`, accepted with probability rate / rate_bound. Cross-check
/// oracle for the hazard-inversion path.
JumpTimeSample sample_jump_time_thinning(const PdmpCharacteristics& chars,
                                         const HybridState& anchor,
                                         const ControlPolicy& policy,
                                         CounterRng& rng, double t_max,
                                         const SimulationOptions& options = {});

/// Thinning-based trajectory. Segments carry only their anchor and end point.
Trajectory simulate_thinning(const PdmpCharacteristics& chars,
                             const HybridState& start, const ControlPolicy& policy,
                             double horizon, std::uint64_t seed,
                             const SimulationOptions& options = {});

/// CSV with header `t,mode,x_1,...,x_n,event`, event in {flow, jump}. The
/// first row after a jump carries `jump`.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

}  // namespace pdmpv
