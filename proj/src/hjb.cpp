#include "pdmpv/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "pdmpv/parallel.hpp"
#include "pdmpv/schema.hpp"

namespace pdmpv {

GridSpec::GridSpec(ModeBoxSet domain_, std::vector<std::size_t> nodes_)
    : domain(std::move(domain_)), nodes(std::move(nodes_)) {
  if (!domain.bounded()) throw std::invalid_argument("grid domain must be bounded");
  if (nodes.size() != domain.dim() || nodes.empty()) {
    throw std::invalid_argument("grid needs one node count per continuous axis");
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] < 2) throw std::invalid_argument("grid needs at least 2 nodes per axis");
    if (!(domain.hi()[i] > domain.lo()[i])) {
      throw std::invalid_argument("grid domain must have positive extent on every axis");
    }
  }
}

GridSpec GridSpec::uniform(ModeBoxSet domain, std::size_t nodes_per_axis) {
  const std::size_t d = domain.dim();
  return GridSpec(std::move(domain), std::vector<std::size_t>(d, nodes_per_axis));
}

std::size_t GridSpec::nodes_per_mode() const {
  std::size_t n = 1;
  for (std::size_t k : nodes) n *= k;
  return n;
}

double GridSpec::spacing(std::size_t axis) const {
  return (domain.hi()[axis] - domain.lo()[axis]) / static_cast<double>(nodes[axis] - 1);
}

GridFunction::GridFunction(GridSpec spec, double fill)
    : spec_(std::move(spec)),
      values_(spec_.domain.modes().size() * spec_.nodes_per_mode(), fill) {}

std::optional<std::size_t> GridFunction::mode_slot(std::size_t mode) const {
  const auto& modes = spec_.domain.modes();
  auto it = std::lower_bound(modes.begin(), modes.end(), mode);
  if (it == modes.end() || *it != mode) return std::nullopt;
  return static_cast<std::size_t>(it - modes.begin());
}

HybridState GridFunction::node_state(std::size_t flat) const {
  const std::size_t npm = spec_.nodes_per_mode();
  HybridState s;
  s.mode = spec_.domain.modes().at(flat / npm);
  std::size_t rem = flat % npm;
  const std::size_t d = spec_.dim();
  s.x.assign(d, 0.0);
  for (std::size_t i = d; i-- > 0;) {
    const std::size_t n = spec_.nodes[i];
    const std::size_t idx = rem % n;
    rem /= n;
    const double lo = spec_.domain.lo()[i], hi = spec_.domain.hi()[i];
    s.x[i] = idx + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(idx) / static_cast<double>(n - 1);
  }
  return s;
}

Stencil GridFunction::stencil(std::size_t mode, std::span<const double> x) const {
  const auto slot = mode_slot(mode);
  if (!slot) throw std::out_of_range("mode " + std::to_string(mode) + " is outside the grid domain");
  const std::size_t d = spec_.dim();
  const std::size_t npm = spec_.nodes_per_mode();
  Stencil st;
  std::vector<std::size_t> base(d);
  std::vector<double> frac(d);
  std::vector<std::size_t> stride(d);
  std::size_t s = 1;
  for (std::size_t i = d; i-- > 0;) {
    stride[i] = s;
    s *= spec_.nodes[i];
  }
  for (std::size_t i = 0; i < d; ++i) {
    const double lo = spec_.domain.lo()[i], hi = spec_.domain.hi()[i];
    const double slack = 1e-12 * (hi - lo);
    if (x[i] < lo - slack || x[i] > hi + slack || std::isnan(x[i])) st.projected = true;
    const double xc = std::isnan(x[i]) ? lo : std::clamp(x[i], lo, hi);
    const std::size_t n = spec_.nodes[i];
    const double t = (xc - lo) / (hi - lo) * static_cast<double>(n - 1);
    const std::size_t i0 = std::min(static_cast<std::size_t>(t), n - 2);
    base[i] = i0;
    frac[i] = std::clamp(t - static_cast<double>(i0), 0.0, 1.0);
  }
  const std::size_t corners = std::size_t{1} << d;
  st.index.reserve(corners);
  st.weight.reserve(corners);
  for (std::size_t c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t flat = *slot * npm;
    for (std::size_t i = 0; i < d; ++i) {
      const bool up = (c >> i) & 1U;
      w *= up ? frac[i] : 1.0 - frac[i];
      flat += (base[i] + (up ? 1 : 0)) * stride[i];
    }
    if (w == 0.0) continue;
    st.index.push_back(flat);
    st.weight.push_back(w);
  }
  return st;
}

double GridFunction::interpolate(const HybridState& s, bool* projected) const {
  const Stencil st = stencil(s.mode, s.x);
  if (projected) *projected = st.projected;
  double v = 0.0;
  for (std::size_t k = 0; k < st.index.size(); ++k) v += st.weight[k] * values_[st.index[k]];
  return v;
}

nlohmann::json GridFunction::to_json() const {
  return {{"schema", "pdmpv.grid/1"},
          {"domain", spec_.domain.to_json()},
          {"shape", spec_.nodes},
          {"mode_count", spec_.domain.modes().size()},
          {"values", values_}};
}

GridFunction GridFunction::from_json(const nlohmann::json& j) {
  const std::string tag = schema::string(j, "schema", "");
  if (tag != "pdmpv.grid/1") throw SchemaError("/schema", "unsupported grid schema '" + tag + "'");
  ModeBoxSet domain = ModeBoxSet::from_json(schema::member(j, "domain", ""), "/domain");
  const auto& shape_json = schema::array(j, "shape", "");
  std::vector<std::size_t> shape;
  for (std::size_t k = 0; k < shape_json.size(); ++k) {
    shape.push_back(schema::unsigned_integer(shape_json[k], schema::child("/shape", k)));
  }
  std::optional<GridSpec> spec;
  try {
    spec.emplace(std::move(domain), std::move(shape));
  } catch (const std::invalid_argument& e) {
    throw SchemaError("/shape", e.what());
  }
  GridFunction g(*spec);
  const auto values = schema::numbers(schema::member(j, "values", ""), "/values");
  if (values.size() != g.size()) {
    throw SchemaError("/values", "expected " + std::to_string(g.size()) + " values");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw SchemaError("/values", "values must be finite");
  }
  g.values() = values;
  return g;
}

void GridFunction::write_csv(std::ostream& out) const {
  out << "mode";
  for (std::size_t i = 0; i < spec_.dim(); ++i) out << ",x_" << (i + 1);
  out << ",value\n";
  for (std::size_t k = 0; k < values_.size(); ++k) {
    const HybridState s = node_state(k);
    out << s.mode;
    for (double v : s.x) out << ',' << format_double(v);
    out << ',' << format_double(values_[k]) << '\n';
  }
}

double generator_apply(const PdmpCharacteristics& chars, const GridFunction& phi,
                       const HybridState& s, std::span<const double> control,
                       std::size_t* projected) {
  const GridSpec& spec = phi.spec();
  const Vector f = chars.flow_at(s, control);
  double drift = 0.0;
  HybridState probe = s;
  for (std::size_t i = 0; i < spec.dim(); ++i) {
    if (f[i] == 0.0) continue;
    const double dx = spec.spacing(i);
    const double lo = spec.domain.lo()[i], hi = spec.domain.hi()[i];
    const double xp = std::min(s.x[i] + dx, hi), xm = std::max(s.x[i] - dx, lo);
    probe.x[i] = xp;
    const double vp = phi.interpolate(probe);
    probe.x[i] = xm;
    const double vm = phi.interpolate(probe);
    probe.x[i] = s.x[i];
    drift += (vp - vm) / (xp - xm) * f[i];
  }
  const double rate = chars.rate_at(s, control);
  if (rate <= 0.0) return drift;
  const double here = phi.interpolate(s);
  double jump = 0.0;
  for (const KernelTarget& t : chars.kernel_at(s, control)) {
    bool clamped = false;
    jump += t.weight * (phi.interpolate(t.target, &clamped) - here);
    if (clamped && projected) ++*projected;
  }
  return drift + rate * jump;
}

namespace {

struct Transition {
  std::vector<std::size_t> offset{0};
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

void append_stencil(Transition& tr, const Stencil& st, double scale) {
  for (std::size_t k = 0; k < st.index.size(); ++k) {
    tr.index.push_back(st.index[k]);
    tr.weight.push_back(scale * st.weight[k]);
  }
}

std::size_t default_iteration_cap(double h, double tol) {
  return static_cast<std::size_t>(std::ceil(std::log(2.0 / tol) / h)) + 10;
}

}  // namespace

SolveResult solve_discounted(const PdmpCharacteristics& chars, const RunningCost& cost,
                             Optimize optimize, const GridSpec& grid,
                             const SolveOptions& options) {
  const double h = options.step, tol = options.tolerance;
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("time step h must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (options.controls.empty()) throw std::invalid_argument("control grid is empty");
  if (grid.dim() != chars.dim) throw std::invalid_argument("grid dimension differs from the model");

  GridFunction v(grid, options.initial_fill);
  if (options.initial_values) {
    if (options.initial_values->size() != v.size()) {
      throw std::invalid_argument("initial grid has the wrong size");
    }
    v.values() = *options.initial_values;
  }
  const std::size_t nodes = v.size();
  const std::size_t nc = options.controls.size();

  SolveReport report;
  report.time_step = h;
  report.iteration_bound = options.max_iterations.value_or(default_iteration_cap(h, tol));

  std::vector<double> running(nodes);
  Transition tr;
  tr.offset.reserve(nodes * nc + 1);
  std::vector<KernelTarget> targets;
  for (std::size_t k = 0; k < nodes; ++k) {
    const HybridState s = v.node_state(k);
    running[k] = cost(s);
    if (!std::isfinite(running[k]) || std::abs(running[k]) > 1.0) {
      throw std::invalid_argument("running cost must lie in [-1, 1]");
    }
    for (const ControlValue& u : options.controls) {
      const double rate = chars.rate_at(s, u);
      if (!(rate >= 0.0) || !std::isfinite(rate)) {
        throw std::invalid_argument("jump rate must be finite and nonnegative");
      }
      report.max_step_rate = std::max(report.max_step_rate, rate);
      if (h * rate >= 1.0) {
        throw std::invalid_argument("h * rate = " + format_double(h * rate) +
                                    " >= 1: the one-step jump probability is invalid");
      }
      const HybridState foot = flow_step(chars, s, u, h);
      const Stencil fs = v.stencil(foot.mode, foot.x);
      ++report.evaluations;
      if (fs.projected) ++report.projected_feet;
      append_stencil(tr, fs, 1.0 - h * rate);
      if (rate > 0.0) {
        targets.clear();
        chars.kernel(s.mode, s.x, u, targets);
        for (const KernelTarget& t : targets) {
          if (!v.mode_slot(t.target.mode)) {
            throw std::invalid_argument("kernel target mode " + std::to_string(t.target.mode) +
                                        " lies outside the grid domain");
          }
          const Stencil ts = v.stencil(t.target.mode, t.target.x);
          ++report.evaluations;
          if (ts.projected) ++report.projected_targets;
          append_stencil(tr, ts, h * rate * t.weight);
        }
      }
      tr.offset.push_back(tr.index.size());
    }
  }
  report.low_confidence = static_cast<double>(report.projected_feet + report.projected_targets) >
                          1e-3 * static_cast<double>(report.evaluations);

  const double discount = std::exp(-h);
  const double running_weight = -std::expm1(-h);
  const std::size_t threads = resolve_threads(options.threads);
  std::vector<double> next(nodes), change(nodes);
  report.feedback.assign(nodes, 0);
  std::size_t increases = 0;
  double log_ratio_sum = 0.0;
  std::size_t ratio_count = 0;

  for (;;) {
    const std::vector<double>& cur = v.values();
    parallel_for(nodes, threads, [&](std::size_t k) {
      double best = 0.0;
      std::size_t arg = 0;
      for (std::size_t c = 0; c < nc; ++c) {
        const std::size_t row = k * nc + c;
        double acc = 0.0;
        for (std::size_t e = tr.offset[row]; e < tr.offset[row + 1]; ++e) {
          acc += tr.weight[e] * cur[tr.index[e]];
        }
        const double q = running_weight * running[k] + discount * acc;
        if (c == 0 || (optimize == Optimize::Min ? q < best : q > best)) {
          best = q;
          arg = c;
        }
      }
      next[k] = best;
      change[k] = std::abs(best - cur[k]);
      report.feedback[k] = arg;
    });
    v.values().swap(next);
    const double residual = *std::max_element(change.begin(), change.end());
    ++report.iterations;
    report.residuals.push_back(residual);
    report.final_residual = residual;
    if (!std::isfinite(residual)) throw SolveError("value iteration produced non-finite values", report);

    const std::size_t n = report.residuals.size();
    if (n >= 3) {
      const double prev = report.residuals[n - 2];
      if (prev >= 1e-3 && prev > 0.0) {
        const double ratio = residual / prev;
        report.contraction_estimate = std::max(report.contraction_estimate, ratio);
        log_ratio_sum += std::log(ratio);
        ++ratio_count;
      }
    }
    // residual * q / (1 - q) bounds the distance to the fixed point
    if (residual * discount < tol * running_weight) break;
    increases = n >= 2 && residual > report.residuals[n - 2] ? increases + 1 : 0;
    if (increases >= 10) {
      throw SolveError("value iteration is not contracting: residual grew for 10 iterations", report);
    }
    if (report.iterations >= report.iteration_bound) {
      throw SolveError("value iteration did not reach the tolerance within the iteration cap", report);
    }
  }
  if (ratio_count > 0) report.mean_contraction = std::exp(log_ratio_sum / static_cast<double>(ratio_count));
  return {std::move(v), std::move(report)};
}

nlohmann::json SolveReport::to_json() const {
  return {{"iterations", iterations},
          {"final_residual", final_residual},
          {"contraction_estimate", contraction_estimate},
          {"mean_contraction", mean_contraction},
          {"time_step", time_step},
          {"iteration_bound", iteration_bound},
          {"max_step_rate", max_step_rate},
          {"projected_feet", projected_feet},
          {"projected_targets", projected_targets},
          {"evaluations", evaluations},
          {"low_confidence", low_confidence}};
}

RunningCost reach_cost(const ModeBoxSet& target) {
  return [target](const HybridState& s) {
    return -target.capped_distance_to_complement(s.mode, s.x);
  };
}

GridFunction smooth(const GridFunction& g, std::size_t passes) {
  GridFunction out = g;
  const GridSpec& spec = g.spec();
  const std::size_t d = spec.dim();
  const std::size_t total = g.size();
  std::vector<std::size_t> stride(d);
  std::size_t s = 1;
  for (std::size_t i = d; i-- > 0;) {
    stride[i] = s;
    s *= spec.nodes[i];
  }
  std::vector<double> tmp(total);
  for (std::size_t p = 0; p < passes; ++p) {
    for (std::size_t axis = 0; axis < d; ++axis) {
      const std::size_t n = spec.nodes[axis], st = stride[axis];
      const auto& cur = out.values();
      for (std::size_t k = 0; k < total; ++k) {
        const std::size_t idx = (k / st) % n;
        const double left = cur[idx == 0 ? k + st : k - st];
        const double right = cur[idx + 1 == n ? k - st : k + st];
        tmp[k] = 0.25 * left + 0.5 * cur[k] + 0.25 * right;
      }
      out.values() = tmp;
    }
  }
  return out;
}

double mu_candidate(const PdmpCharacteristics& chars, const ModeBoxSet& target,
                    const HybridState& x, const GridFunction& phi,
                    const std::vector<ControlValue>& controls) {
  if (!phi.domain().contains(x)) throw std::invalid_argument("mu* point lies outside the grid domain");
  if (controls.empty()) throw std::invalid_argument("control grid is empty");
  const double phi_x = phi.interpolate(x);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const HybridState y = phi.node_state(k);
    const double cost = target.capped_distance_to_complement(y.mode, y.x);
    for (const ControlValue& u : controls) {
      const double value = generator_apply(chars, phi, y, u) - cost + phi_x - phi.values()[k];
      best = std::min(best, value);
    }
  }
  return best;
}

GridFunction random_test_function(const GridSpec& grid, CounterRng& rng) {
  const std::size_t d = grid.dim();
  const std::size_t modes = grid.domain.modes().size();
  const std::size_t bumps = 1 + static_cast<std::size_t>(rng() % 5);
  struct Bump {
    Vector centre, width, amplitude;
  };
  std::vector<Bump> family(bumps);
  for (Bump& b : family) {
    for (std::size_t i = 0; i < d; ++i) {
      const double lo = grid.domain.lo()[i], extent = grid.domain.hi()[i] - lo;
      b.centre.push_back(lo + extent * rng.uniform());
      b.width.push_back(extent * (0.1 + 0.4 * rng.uniform()));
    }
    for (std::size_t m = 0; m < modes; ++m) b.amplitude.push_back(2.0 * rng.uniform() - 1.0);
  }
  GridFunction phi(grid);
  const std::size_t npm = grid.nodes_per_mode();
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const HybridState y = phi.node_state(k);
    const std::size_t slot = k / npm;
    double value = 0.0;
    for (const Bump& b : family) {
      double q = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double z = (y.x[i] - b.centre[i]) / b.width[i];
        q += z * z;
      }
      value += b.amplitude[slot] * std::exp(-0.5 * q);
    }
    phi.values()[k] = value;
  }
  return phi;
}

std::string ReachDecision::verdict() const {
  return reachable ? "REACHABLE" : "NOT-REACHABLE-AT-RESOLUTION";
}

nlohmann::json ReachDecision::to_json() const {
  nlohmann::json j;
  j["verdict"] = verdict();
  j["reachable"] = reachable;
  j["value"] = value;
  j["margin"] = margin;
  j["solve"] = solve.to_json();
  j["duality_audit"] = {{"random_mu", audit.random_mu},
                        {"max_random_mu", audit.max_random_mu},
                        {"smoothed_mu", audit.smoothed_mu},
                        {"slack", audit.slack},
                        {"weak_duality_holds", audit.weak_duality_holds},
                        {"smoothed_agrees", audit.smoothed_agrees}};
  j["hitting"] = hitting ? hitting->to_json() : nlohmann::json(nullptr);
  j["note"] =
      "decision rests on the solved v0 and the equality v0 = mu*; a finite test-function family "
      "only bounds mu* from below, so the audit is a consistency check";
  return j;
}

ReachDecision decide_reachability(const PdmpCharacteristics& chars, const ModeBoxSet& target,
                                  const HybridState& x, const GridSpec& grid,
                                  const ReachOptions& options) {
  if (!grid.domain.contains(x)) throw std::invalid_argument("start state lies outside the grid domain");
  SolveResult solved = solve_discounted(chars, reach_cost(target), Optimize::Min, grid, options.solve);
  ReachDecision d;
  d.value = solved.value.interpolate(x);
  d.margin = options.margin;
  d.reachable = d.value < -options.margin;
  d.audit.slack = options.audit_slack;
  d.audit.max_random_mu = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < options.audit_functions; ++k) {
    CounterRng rng = CounterRng::split(options.audit_seed, k);
    const GridFunction phi = random_test_function(grid, rng);
    const double mu = mu_candidate(chars, target, x, phi, options.solve.controls);
    d.audit.random_mu.push_back(mu);
    d.audit.max_random_mu = std::max(d.audit.max_random_mu, mu);
  }
  d.audit.weak_duality_holds = d.audit.max_random_mu <= d.value + options.audit_slack;
  const GridFunction smoothed = smooth(solved.value, options.smoothing_passes);
  d.audit.smoothed_mu = mu_candidate(chars, target, x, smoothed, options.solve.controls);
  d.audit.smoothed_agrees = std::abs(d.audit.smoothed_mu - d.value) <= options.audit_slack;
  if (options.monte_carlo) {
    d.hitting = estimate_hitting_probability(chars, target, x, options.policy, *options.monte_carlo);
  }
  d.solve = std::move(solved.report);
  return d;
}

}  // namespace pdmpv
