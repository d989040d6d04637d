#include "pdmpv/pdmp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

namespace pdmpv {

Vector PdmpCharacteristics::flow_at(const HybridState& s,
                                    std::span<const double> u) const {
  Vector dx(dim, 0.0);
  flow(s.mode, s.x, u, dx);
  return dx;
}

double PdmpCharacteristics::rate_at(const HybridState& s,
                                    std::span<const double> u) const {
  return rate(s.mode, s.x, u);
}

std::vector<KernelTarget> PdmpCharacteristics::kernel_at(
    const HybridState& s, std::span<const double> u) const {
  std::vector<KernelTarget> out;
  if (rate(s.mode, s.x, u) > 0.0) kernel(s.mode, s.x, u, out);
  return out;
}

ControlPolicy::ControlPolicy(std::vector<ControlValue> control_space, Decide decide)
    : space_(std::move(control_space)), decide_(std::move(decide)) {
  if (space_.empty()) throw std::invalid_argument("control space must be nonempty");
  if (!decide_) throw std::invalid_argument("control policy needs a decision rule");
}

ControlPolicy ControlPolicy::uncontrolled() { return constant({}); }

ControlPolicy ControlPolicy::constant(ControlValue u) {
  return ControlPolicy({std::move(u)}, [](const HybridState&, double) { return 0; });
}

const ControlValue& ControlPolicy::decide(const HybridState& anchor, double elapsed) const {
  const std::size_t index = decide_(anchor, elapsed);
  if (index >= space_.size()) {
    throw std::out_of_range("control policy returned index " + std::to_string(index) +
                            " outside a control space of size " +
                            std::to_string(space_.size()));
  }
  return space_[index];
}

ControlSchedule ControlSchedule::from(const ControlPolicy& policy) {
  ControlSchedule schedule;
  schedule.anchor_only = policy.is_constant();
  schedule.update = [policy](const HybridState& anchor, double elapsed, ControlValue& out) {
    const ControlValue& u = policy.decide(anchor, elapsed);
    out.assign(u.begin(), u.end());
  };
  return schedule;
}

namespace {

struct Rk4Workspace {
  Vector k1, k2, k3, k4, probe, next;

  explicit Rk4Workspace(std::size_t n)
      : k1(n), k2(n), k3(n), k4(n), probe(n), next(n) {}
};

/// One RK4 step of the flow augmented with the hazard. Writes the new
/// continuous state into ws.next and returns the hazard increment (zero when
/// `with_hazard` is false).
double rk4_step(const PdmpCharacteristics& chars, std::size_t mode,
                std::span<const double> x, std::span<const double> u, double h,
                Rk4Workspace& ws, bool with_hazard) {
  const std::size_t n = x.size();
  double r1 = 0, r2 = 0, r3 = 0, r4 = 0;
  const bool fixed_rate = chars.rate_depends_on_mode_only;
  if (with_hazard) r1 = chars.rate(mode, x, u);
  chars.flow(mode, x, u, ws.k1);
  for (std::size_t i = 0; i < n; ++i) ws.probe[i] = x[i] + 0.5 * h * ws.k1[i];
  if (with_hazard) r2 = fixed_rate ? r1 : chars.rate(mode, ws.probe, u);
  chars.flow(mode, ws.probe, u, ws.k2);
  for (std::size_t i = 0; i < n; ++i) ws.probe[i] = x[i] + 0.5 * h * ws.k2[i];
  if (with_hazard) r3 = fixed_rate ? r1 : chars.rate(mode, ws.probe, u);
  chars.flow(mode, ws.probe, u, ws.k3);
  for (std::size_t i = 0; i < n; ++i) ws.probe[i] = x[i] + h * ws.k3[i];
  if (with_hazard) r4 = fixed_rate ? r1 : chars.rate(mode, ws.probe, u);
  chars.flow(mode, ws.probe, u, ws.k4);
  for (std::size_t i = 0; i < n; ++i) {
    ws.next[i] = x[i] + h / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
  }
  return with_hazard ? h / 6.0 * (r1 + 2.0 * r2 + 2.0 * r3 + r4) : 0.0;
}

void require_finite(const Vector& x, std::size_t mode) {
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw IntegrationError("flow integration produced a non-finite state",
                             HybridState{mode, x});
    }
  }
}

/// End of step k on a grid of spacing h truncated at `limit`.
double step_end(std::size_t k, double h, double limit) {
  const double end = static_cast<double>(k + 1) * h;
  return end > limit - 1e-12 * std::max(1.0, limit) ? limit : end;
}

struct SegmentOutcome {
  bool jumped = false;
  double elapsed = 0.0;
  bool stopped = false;
};

/// Integrates one inter-jump segment from `state` (the anchor) in place.
/// `control` must already hold the control at elapsed 0.
SegmentOutcome integrate_segment(const PdmpCharacteristics& chars, HybridState& state,
                                 double t0, const ControlSchedule& schedule,
                                 ControlValue& control, double threshold,
                                 double max_elapsed, double h, Rk4Workspace& ws,
                                 const PathObserver* observer) {
  const HybridState anchor = state;
  double hazard = 0.0;
  double elapsed = 0.0;
  for (std::size_t k = 0; elapsed < max_elapsed; ++k) {
    const double next_elapsed = step_end(k, h, max_elapsed);
    const double dt = next_elapsed - elapsed;
    if (dt <= 0.0) break;
    const double dh = rk4_step(chars, state.mode, state.x, control, dt, ws, true);
    require_finite(ws.next, state.mode);
    if (hazard + dh >= threshold) {
      // Bisection on the sub-step length; the crossing lies in (lo, hi].
      const double tol = 1e-10 * (1.0 + t0 + elapsed);
      double lo = 0.0, hi = dt;
      while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double dm = rk4_step(chars, state.mode, state.x, control, mid, ws, true);
        if (hazard + dm >= threshold) hi = mid; else lo = mid;
      }
      rk4_step(chars, state.mode, state.x, control, hi, ws, false);
      require_finite(ws.next, state.mode);
      state.x.swap(ws.next);
      elapsed += hi;
      if (!schedule.anchor_only) schedule.update(anchor, elapsed, control);
      return {true, elapsed, false};
    }
    state.x.swap(ws.next);
    hazard += dh;
    elapsed = next_elapsed;
    if (!schedule.anchor_only) schedule.update(anchor, elapsed, control);
    if (observer && !(*observer)(t0 + elapsed, state, control, PathEvent::Flow)) {
      return {false, elapsed, true};
    }
  }
  return {false, elapsed, false};
}

void check_step(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("integration step must be positive");
}

}  // namespace

HybridState flow_step(const PdmpCharacteristics& chars, const HybridState& state,
                      std::span<const double> control, double h) {
  check_step(h);
  Rk4Workspace ws(state.x.size());
  rk4_step(chars, state.mode, state.x, control, h, ws, false);
  require_finite(ws.next, state.mode);
  return HybridState{state.mode, ws.next};
}

JumpTimeSample sample_jump_time(const PdmpCharacteristics& chars,
                                const HybridState& anchor,
                                const ControlPolicy& policy, CounterRng& rng,
                                double t_max, const SimulationOptions& options) {
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  check_step(options.step);
  const ControlSchedule schedule = ControlSchedule::from(policy);
  ControlValue control;
  schedule.update(anchor, 0.0, control);
  HybridState state = anchor;
  Rk4Workspace ws(state.x.size());
  const double threshold = rng.exponential();
  const SegmentOutcome seg = integrate_segment(chars, state, 0.0, schedule, control,
                                               threshold, t_max, options.step, ws, nullptr);
  JumpTimeSample sample;
  if (seg.jumped) sample.time = seg.elapsed;
  sample.state = std::move(state);
  return sample;
}

HybridState sample_post_jump(const PdmpCharacteristics& chars,
                             const HybridState& pre_state,
                             std::span<const double> control, CounterRng& rng) {
  const double rate = chars.rate(pre_state.mode, pre_state.x, control);
  if (!(rate > 0.0)) {
    throw ContractViolation("post-jump sampling requested where the jump rate is zero");
  }
  std::vector<KernelTarget> targets;
  chars.kernel(pre_state.mode, pre_state.x, control, targets);
  if (targets.empty()) throw ContractViolation("jump kernel returned no targets");
  double total = 0.0;
  for (const auto& t : targets) total += t.weight;
  const double draw = rng.uniform() * total;
  double cumulative = 0.0;
  for (const auto& t : targets) {
    cumulative += t.weight;
    if (draw < cumulative) return t.target;
  }
  // draw == total only through rounding; take the last positive-weight target
  for (auto it = targets.rbegin(); it != targets.rend(); ++it) {
    if (it->weight > 0.0) return it->target;
  }
  return targets.back().target;
}

PathSummary run_path(const PdmpCharacteristics& chars, const HybridState& start,
                     const ControlSchedule& schedule, double horizon, CounterRng& rng,
                     const SimulationOptions& options, const PathObserver& observer) {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  check_step(options.step);
  if (start.x.size() != chars.dim || start.mode >= chars.mode_count) {
    throw std::invalid_argument("start state does not match the characteristics");
  }
  PathSummary summary;
  HybridState state = start;
  ControlValue control;
  Rk4Workspace ws(state.x.size());
  const PathObserver* obs = observer ? &observer : nullptr;
  double t = 0.0;

  schedule.update(state, 0.0, control);
  if (obs && !(*obs)(t, state, control, PathEvent::Start)) {
    summary.stopped_early = true;
    summary.end_state = std::move(state);
    return summary;
  }
  while (true) {
    const double threshold = rng.exponential();
    const SegmentOutcome seg = integrate_segment(chars, state, t, schedule, control,
                                                 threshold, horizon - t, options.step,
                                                 ws, obs);
    if (seg.stopped) {
      summary.stopped_early = true;
      t += seg.elapsed;
      break;
    }
    if (!seg.jumped) {
      t = horizon;
      break;
    }
    t += seg.elapsed;
    if (obs && !(*obs)(t, state, control, PathEvent::PreJump)) {
      summary.stopped_early = true;
      break;
    }
    state = sample_post_jump(chars, state, control, rng);
    ++summary.jumps;
    schedule.update(state, 0.0, control);
    if (obs && !(*obs)(t, state, control, PathEvent::PostJump)) {
      summary.stopped_early = true;
      break;
    }
    if (t >= horizon) break;
  }
  summary.end_time = t;
  summary.end_state = std::move(state);
  return summary;
}

Trajectory simulate(const PdmpCharacteristics& chars, const HybridState& start,
                    const ControlPolicy& policy, double horizon, std::uint64_t seed,
                    const SimulationOptions& options) {
  Trajectory traj;
  traj.seed = seed;
  CounterRng rng(seed);
  HybridState pre;
  const ControlSchedule schedule = ControlSchedule::from(policy);
  run_path(chars, start, schedule, horizon, rng, options,
           [&](double t, const HybridState& s, std::span<const double>, PathEvent e) {
             switch (e) {
               case PathEvent::Start:
               case PathEvent::PostJump:
                 traj.segments.push_back({t, s, {{t, s.x}}});
                 if (e == PathEvent::PostJump) traj.jumps.push_back({t, pre, s});
                 break;
               case PathEvent::Flow:
                 traj.segments.back().points.push_back({t, s.x});
                 break;
               case PathEvent::PreJump:
                 traj.segments.back().points.push_back({t, s.x});
                 pre = s;
                 break;
             }
             return true;
           });
  return traj;
}

namespace {

/// Flows `state` forward by `duration` with steps of at most h, updating the
/// control on the step grid measured from the anchor.
void flow_for(const PdmpCharacteristics& chars, HybridState& state,
              const HybridState& anchor, double& elapsed, double duration,
              const ControlSchedule& schedule, ControlValue& control, double h,
              Rk4Workspace& ws) {
  const double target = elapsed + duration;
  while (elapsed < target) {
    const double dt = std::min(h, target - elapsed);
    if (dt <= 0.0) break;
    rk4_step(chars, state.mode, state.x, control, dt, ws, false);
    require_finite(ws.next, state.mode);
    state.x.swap(ws.next);
    elapsed += dt;
    if (!schedule.anchor_only) schedule.update(anchor, elapsed, control);
  }
  elapsed = target;
}

double thinning_bound(const PdmpCharacteristics& chars) {
  if (!(chars.rate_bound > 0.0) || !std::isfinite(chars.rate_bound)) {
    throw std::invalid_argument("thinning needs a finite positive rate bound");
  }
  return chars.rate_bound;
}

/// First accepted thinning candidate after the anchor. Returns the elapsed
/// time of the jump, or nullopt when the clock passes t_max.
std::optional<double> thinning_segment(const PdmpCharacteristics& chars,
                                       HybridState& state, const ControlSchedule& schedule,
                                       ControlValue& control, CounterRng& rng,
                                       double t_max, double h, double bound,
                                       Rk4Workspace& ws) {
  const HybridState anchor = state;
  double elapsed = 0.0;
  while (true) {
    const double gap = rng.exponential() / bound;
    if (elapsed + gap >= t_max) {
      flow_for(chars, state, anchor, elapsed, t_max - elapsed, schedule, control, h, ws);
      return std::nullopt;
    }
    flow_for(chars, state, anchor, elapsed, gap, schedule, control, h, ws);
    const double rate = chars.rate(state.mode, state.x, control);
    if (rate > bound * (1.0 + 1e-12)) {
      throw ContractViolation("jump rate exceeds the declared rate bound");
    }
    if (rng.uniform() * bound < rate) return elapsed;
  }
}

}  // namespace

JumpTimeSample sample_jump_time_thinning(const PdmpCharacteristics& chars,
                                         const HybridState& anchor,
                                         const ControlPolicy& policy, CounterRng& rng,
                                         double t_max, const SimulationOptions& options) {
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  check_step(options.step);
  const double bound = thinning_bound(chars);
  const ControlSchedule schedule = ControlSchedule::from(policy);
  ControlValue control;
  schedule.update(anchor, 0.0, control);
  HybridState state = anchor;
  Rk4Workspace ws(state.x.size());
  JumpTimeSample sample;
  sample.time = thinning_segment(chars, state, schedule, control, rng, t_max,
                                 options.step, bound, ws);
  sample.state = std::move(state);
  return sample;
}

Trajectory simulate_thinning(const PdmpCharacteristics& chars, const HybridState& start,
                             const ControlPolicy& policy, double horizon,
                             std::uint64_t seed, const SimulationOptions& options) {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  check_step(options.step);
  const double bound = thinning_bound(chars);
  const ControlSchedule schedule = ControlSchedule::from(policy);
  Trajectory traj;
  traj.seed = seed;
  CounterRng rng(seed);
  HybridState state = start;
  ControlValue control;
  Rk4Workspace ws(state.x.size());
  double t = 0.0;
  while (true) {
    schedule.update(state, 0.0, control);
    traj.segments.push_back({t, state, {{t, state.x}}});
    const auto jump = thinning_segment(chars, state, schedule, control, rng, horizon - t,
                                       options.step, bound, ws);
    if (!jump) {
      traj.segments.back().points.push_back({horizon, state.x});
      break;
    }
    t += *jump;
    traj.segments.back().points.push_back({t, state.x});
    HybridState post = sample_post_jump(chars, state, control, rng);
    traj.jumps.push_back({t, state, post});
    state = std::move(post);
  }
  return traj;
}

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const std::size_t n =
      trajectory.segments.empty() ? 0 : trajectory.segments.front().anchor.x.size();
  out << "t,mode";
  for (std::size_t i = 1; i <= n; ++i) out << ",x_" << i;
  out << ",event\n";
  for (std::size_t s = 0; s < trajectory.segments.size(); ++s) {
    const auto& seg = trajectory.segments[s];
    for (std::size_t p = 0; p < seg.points.size(); ++p) {
      const auto& pt = seg.points[p];
      out << format_double(pt.t) << ',' << seg.anchor.mode;
      for (double v : pt.x) out << ',' << format_double(v);
      out << ',' << (s > 0 && p == 0 ? "jump" : "flow") << '\n';
    }
  }
}

}  // namespace pdmpv
