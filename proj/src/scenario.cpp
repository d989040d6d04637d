#include "pdmpv/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "pdmpv/geometry.hpp"
#include "pdmpv/hjb.hpp"
#include "pdmpv/models.hpp"
#include "pdmpv/plot.hpp"
#include "pdmpv/reaction_network.hpp"
#include "pdmpv/schema.hpp"
#include "pdmpv/value.hpp"

namespace pdmpv {

namespace {

using nlohmann::json;

struct Model {
  std::string kind;
  PdmpCharacteristics chars;
  std::optional<CookParams> cook;
  std::optional<PhageParams> phage;
  json description;
};

Model parse_model(const json& doc) {
  const json& mj = schema::member(doc, "model", "");
  Model m;
  m.kind = schema::string(mj, "kind", "/model");
  const json empty = json::object();
  const json& params = mj.is_object() && mj.contains("params") ? mj.at("params") : empty;
  if (m.kind == "cook") {
    m.cook = CookParams::from_json(params, "/model/params");
    m.chars = build_cook(*m.cook);
    m.description = m.cook->to_json();
  } else if (m.kind == "onoff") {
    const OnOffParams p = OnOffParams::from_json(params, "/model/params");
    m.chars = build_onoff(p);
    m.description = p.description;
  } else if (m.kind == "phage") {
    m.phage = PhageParams::from_json(params, "/model/params");
    m.chars = build_phage(*m.phage);
    m.description = m.phage->to_json();
  } else if (m.kind == "network") {
    const json& net = schema::member(mj, "network", "/model");
    try {
      const ReactionNetwork rn = ReactionNetwork::from_json(net);
      m.chars = compile(rn);
      m.description = rn.to_json();
    } catch (const SchemaError& e) {
      throw SchemaError("/model/network" + e.path(), e.what());
    }
  } else {
    throw SchemaError("/model/kind", "unknown model kind '" + m.kind +
                                         "' (expected cook, onoff, phage or network)");
  }
  return m;
}

ModeBoxSet parse_set(const json& j, const std::string& path, const Model& model) {
  if (j.is_object() && j.contains("k_epsilon")) {
    if (!model.phage) throw SchemaError(path + "/k_epsilon", "k_epsilon sets need the phage model");
    const double eps = schema::positive(j, "k_epsilon", path);
    if (!(eps < model.phage->epsilon_max())) {
      throw SchemaError(path + "/k_epsilon",
                        "must be below epsilon_max = " + format_double(model.phage->epsilon_max()));
    }
    return model.phage->k_epsilon(eps);
  }
  ModeBoxSet set = ModeBoxSet::from_json(j, path);
  if (set.dim() != model.chars.dim) throw SchemaError(path, "set dimension differs from the model");
  for (std::size_t mode : set.modes()) {
    if (mode >= model.chars.mode_count) {
      throw SchemaError(path + "/modes", "mode " + std::to_string(mode) + " does not exist");
    }
  }
  return set;
}

ModeBoxSet required_set(const json& doc, const std::string& key, const Model& model) {
  return parse_set(schema::member(doc, key, ""), "/" + key, model);
}

HybridState parse_state(const json& j, const std::string& path, const Model& model,
                        std::uint64_t seed, std::uint64_t stream) {
  if (j.is_object() && j.contains("random")) {
    const ModeBoxSet box = parse_set(j.at("random"), path + "/random", model);
    if (!box.bounded()) throw SchemaError(path + "/random", "random starts need a bounded box");
    CounterRng rng = CounterRng::split(seed, 0x5354415254ULL + stream);
    HybridState s;
    s.mode = box.modes()[static_cast<std::size_t>(rng() % box.modes().size())];
    for (std::size_t i = 0; i < box.dim(); ++i) {
      s.x.push_back(box.lo()[i] + (box.hi()[i] - box.lo()[i]) * rng.uniform());
    }
    return s;
  }
  HybridState s;
  const json& mode = schema::member(j, "mode", path);
  s.mode = static_cast<std::size_t>(schema::unsigned_integer(mode, path + "/mode"));
  if (s.mode >= model.chars.mode_count) throw SchemaError(path + "/mode", "mode does not exist");
  s.x = schema::numbers(schema::member(j, "x", path), path + "/x");
  if (s.x.size() != model.chars.dim) throw SchemaError(path + "/x", "wrong state dimension");
  for (double v : s.x) {
    if (!std::isfinite(v)) throw SchemaError(path + "/x", "state must be finite");
  }
  return s;
}

json state_json(const HybridState& s) { return {{"mode", s.mode}, {"x", s.x}}; }

std::uint64_t scenario_seed(const json& doc, const RunOverrides& o) {
  if (o.seed) return *o.seed;
  if (doc.contains("seed")) return schema::unsigned_integer(doc.at("seed"), "/seed");
  return 1;
}

const json& section(const json& doc, const std::string& key) {
  static const json empty = json::object();
  if (!doc.contains(key)) return empty;
  const json& s = doc.at(key);
  if (!s.is_object()) throw SchemaError("/" + key, "expected an object");
  return s;
}

std::size_t count_or(const json& obj, const std::string& key, const std::string& path,
                     std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  return static_cast<std::size_t>(schema::unsigned_integer(obj.at(key), schema::child(path, key)));
}

double positive_or(const json& obj, const std::string& key, const std::string& path,
                   double fallback) {
  if (!obj.contains(key)) return fallback;
  return schema::positive(obj, key, path);
}

SimulationOptions simulation_options(const json& s, const std::string& path) {
  SimulationOptions o;
  o.step = positive_or(s, "step", path, o.step);
  return o;
}

MonteCarloConfig mc_config(const json& s, const std::string& path, std::uint64_t seed,
                           const RunOverrides& o) {
  MonteCarloConfig c;
  c.paths = count_or(s, "paths", path, c.paths);
  if (c.paths == 0) throw SchemaError(path + "/paths", "must be positive");
  c.horizon = positive_or(s, "horizon", path, c.horizon);
  c.simulation = simulation_options(s, path);
  c.seed = seed;
  c.threads = o.threads;
  return c;
}

std::vector<HybridState> probes(const json& s, const std::string& path, const json& doc,
                                const Model& model, std::uint64_t seed) {
  std::vector<HybridState> out;
  if (s.contains("probes")) {
    const json& arr = schema::array(s, "probes", path);
    for (std::size_t k = 0; k < arr.size(); ++k) {
      out.push_back(parse_state(arr[k], schema::child(path + "/probes", k), model, seed, k + 1));
    }
  } else {
    out.push_back(parse_state(schema::member(doc, "start", ""), "/start", model, seed, 0));
  }
  return out;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

PlotStyle plot_style(const json& doc, const Model& model, std::size_t axis) {
  const json& p = section(doc, "plot");
  PlotStyle style;
  const std::string name = p.contains("style") ? schema::string(p, "style", "/plot") : "plain";
  if (p.contains("title")) style.title = schema::string(p, "title", "/plot");
  style.y_label = "x_" + std::to_string(axis + 1);
  if (name == "figure1") {
    const ModeBoxSet k = required_set(doc, "set", model);
    style.bounds.push_back({k.lo()[axis], "green", false, "invariant set"});
    style.bounds.push_back({k.hi()[axis], "green", false, "invariant set"});
    if (doc.contains("target")) {
      const ModeBoxSet o = required_set(doc, "target", model);
      style.highlight = std::make_pair(o.lo()[axis], o.hi()[axis]);
    }
  } else if (name == "figure2") {
    const ModeBoxSet k = required_set(doc, "set", model);
    if (k.dim() < 2) throw SchemaError("/plot/style", "figure2 plots need two continuous axes");
    style.x_label = "x_1";
    style.y_label = "x_2";
    style.bounds.push_back({k.hi()[0], "green", true, "x_1 bound"});
    style.bounds.push_back({k.hi()[1], "green", false, "x_2 bound"});
  } else if (name != "plain") {
    throw SchemaError("/plot/style", "unknown style '" + name + "' (expected plain, figure1, figure2)");
  }
  return style;
}

std::string trajectory_svg(const json& doc, const Model& model, const Trajectory& tr) {
  const json& p = section(doc, "plot");
  const std::string name = p.contains("style") ? schema::string(p, "style", "/plot") : "plain";
  const std::size_t axis = count_or(p, "axis", "/plot", 0);
  if (axis >= model.chars.dim) throw SchemaError("/plot/axis", "axis exceeds the state dimension");
  PlotStyle style = plot_style(doc, model, axis);
  if (name == "figure2") return plot_phase(tr, 0, 1, style);
  return plot_trajectory(tr, axis, style);
}

Trajectory run_simulation(const json& doc, const Model& model, std::uint64_t seed,
                          HybridState& start) {
  const json& s = section(doc, "simulate");
  start = parse_state(schema::member(doc, "start", ""), "/start", model, seed, 0);
  const double horizon = positive_or(s, "horizon", "/simulate", 100.0);
  return simulate(model.chars, start, ControlPolicy::uncontrolled(), horizon, seed,
                  simulation_options(s, "/simulate"));
}

RunOutcome cmd_simulate(const json& doc, const Model& model, std::uint64_t seed, bool csv) {
  HybridState start;
  const Trajectory tr = run_simulation(doc, model, seed, start);
  RunOutcome out;
  json summary = {{"schema", "pdmpv.simulation/1"},
                  {"seed", seed},
                  {"start", state_json(start)},
                  {"horizon", tr.segments.back().points.back().t},
                  {"jumps", tr.jumps.size()},
                  {"end_state", state_json({tr.segments.back().anchor.mode,
                                            tr.segments.back().points.back().x})}};
  if (doc.contains("set")) {
    const ModeBoxSet k = required_set(doc, "set", model);
    double worst = 0.0;
    for (const auto& seg : tr.segments) {
      for (const auto& p : seg.points) worst = std::max(worst, k.capped_distance(seg.anchor.mode, p.x));
    }
    summary["max_capped_distance_to_set"] = worst;
  }
  if (csv) {
    std::ostringstream c;
    write_trajectory_csv(c, tr);
    out.artifacts["trajectory.csv"] = c.str();
    out.artifacts["simulation.json"] = dump(summary);
    out.artifacts["trajectory.svg"] = trajectory_svg(doc, model, tr);
  } else {
    out.artifacts["plot.svg"] = trajectory_svg(doc, model, tr);
  }
  out.summary = std::to_string(tr.jumps.size()) + " jumps on [0, " +
                format_double(tr.segments.back().points.back().t) + "]";
  return out;
}

CheckResolution check_resolution(const json& doc) {
  const json& c = section(doc, "check");
  CheckResolution r;
  r.density = count_or(c, "density", "/check", r.density);
  if (r.density < 2) throw SchemaError("/check/density", "must be at least 2");
  r.tolerance = c.contains("tolerance") ? schema::number(c, "tolerance", "/check") : r.tolerance;
  if (!(r.tolerance >= 0.0)) throw SchemaError("/check/tolerance", "must be nonnegative");
  r.cone_directions = count_or(c, "cone_directions", "/check", r.cone_directions);
  return r;
}

RunOutcome cmd_check(const json& doc, const Model& model, bool invariance) {
  const ModeBoxSet k = required_set(doc, "set", model);
  if (!k.bounded()) throw SchemaError("/set", "checks need a bounded set");
  const CheckResolution res = check_resolution(doc);
  const CheckReport report = invariance ? check_invariance(model.chars, k, res)
                                        : check_viability(model.chars, k, res);
  json j = report.to_json();
  j["schema"] = "pdmpv.check/1";
  j["condition"] = invariance ? "invariance" : "viability";
  j["set"] = k.to_json();
  RunOutcome out;
  out.exit_code = report.pass ? kExitSuccess : kExitCheckFailed;
  out.artifacts["check.json"] = dump(j);
  out.summary = std::string(invariance ? "invariance" : "viability") + " check " +
                (report.pass ? "PASS" : "FAIL");
  return out;
}

RunOutcome cmd_value(const json& doc, const Model& model, std::uint64_t seed,
                     const RunOverrides& o) {
  const json& v = schema::member(doc, "value", "");
  const std::string kind = schema::string(v, "kind", "/value");
  const MonteCarloConfig cfg = mc_config(v, "/value", seed, o);
  const auto starts = probes(v, "/value", doc, model, seed);
  const ControlPolicy policy = ControlPolicy::uncontrolled();
  json result = {{"schema", "pdmpv.value/1"},
                 {"kind", kind},
                 {"config",
                  {{"paths", cfg.paths},
                   {"horizon", cfg.horizon},
                   {"step", cfg.simulation.step},
                   {"seed", cfg.seed}}},
                 {"model", model.description}};
  json estimates = json::array();
  RunOutcome out;
  if (kind == "viability" || kind == "invariance") {
    const ModeBoxSet k = required_set(doc, "set", model);
    for (const auto& s : starts) {
      const ValueEstimate e = kind == "viability"
                                  ? estimate_viability_value(model.chars, k, s, policy, cfg)
                                  : estimate_invariance_value(model.chars, k, s, policy, cfg);
      estimates.push_back({{"start", state_json(s)}, {"estimate", e.to_json()}});
    }
  } else if (kind == "reach") {
    const ModeBoxSet target = required_set(doc, "target", model);
    Vector direction(model.chars.dim, 0.0);
    direction[0] = 1.0;
    if (v.contains("direction")) {
      direction = schema::numbers(v.at("direction"), "/value/direction");
      if (direction.size() != model.chars.dim) {
        throw SchemaError("/value/direction", "wrong dimension");
      }
    }
    double norm = 0.0;
    for (double d : direction) norm += d * d;
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) throw SchemaError("/value/direction", "must be nonzero");
    auto perturbation_for = [&](double r) {
      Vector shift = direction;
      for (double& d : shift) d *= r / norm;
      return r == 0.0 ? PerturbationPolicy::none() : PerturbationPolicy::constant(shift);
    };
    if (v.contains("radii")) {
      const Vector radii = schema::numbers(v.at("radii"), "/value/radii");
      if (starts.size() != 1) throw SchemaError("/value/probes", "sweeps take a single start");
      std::vector<SweepEntry> sweep;
      try {
        sweep = convergence_sweep(model.chars, target, starts[0], policy, perturbation_for, radii, cfg);
      } catch (const std::invalid_argument& e) {
        throw SchemaError("/value/radii", e.what());
      }
      json sj = json::array();
      for (const auto& e : sweep) {
        sj.push_back({{"epsilon", e.radius},
                      {"estimate", e.estimate.to_json()},
                      {"gap", e.gap},
                      {"gap_std_error", e.gap_std_error},
                      {"gap_ci95", {e.gap_lo, e.gap_hi}}});
      }
      result["sweep"] = sj;
      std::ostringstream csv;
      write_sweep_csv(csv, sweep);
      out.artifacts["sweep.csv"] = csv.str();
    } else {
      const double radius = v.contains("radius") ? schema::number(v, "radius", "/value") : 0.0;
      if (!(radius >= 0.0)) throw SchemaError("/value/radius", "must be nonnegative");
      for (const auto& s : starts) {
        const ValueEstimate e =
            estimate_reach_value(model.chars, target, s, policy, perturbation_for(radius), cfg);
        estimates.push_back({{"start", state_json(s)}, {"estimate", e.to_json()}});
      }
    }
  } else if (kind == "hitting") {
    const ModeBoxSet target = required_set(doc, "target", model);
    for (const auto& s : starts) {
      const HittingEstimate e = estimate_hitting_probability(model.chars, target, s, policy, cfg);
      estimates.push_back({{"start", state_json(s)}, {"estimate", e.to_json()}});
    }
  } else {
    throw SchemaError("/value/kind",
                      "unknown kind '" + kind + "' (expected viability, invariance, reach, hitting)");
  }
  result["estimates"] = estimates;
  out.artifacts["value.json"] = dump(result);
  out.summary = kind + " estimates for " + std::to_string(starts.size()) + " start(s)";
  return out;
}

GridSpec grid_spec(const json& h, const Model& model) {
  const ModeBoxSet domain = parse_set(schema::member(h, "domain", "/hjb"), "/hjb/domain", model);
  if (!domain.bounded()) throw SchemaError("/hjb/domain", "grid domains must be bounded");
  std::vector<std::size_t> nodes(model.chars.dim, model.chars.dim == 1 ? 129 : 65);
  if (h.contains("nodes")) {
    const json& n = h.at("nodes");
    if (n.is_number_integer()) {
      nodes.assign(model.chars.dim, static_cast<std::size_t>(schema::unsigned_integer(n, "/hjb/nodes")));
    } else if (n.is_array() && n.size() == model.chars.dim) {
      for (std::size_t i = 0; i < n.size(); ++i) {
        nodes[i] = static_cast<std::size_t>(schema::unsigned_integer(n[i], schema::child("/hjb/nodes", i)));
      }
    } else {
      throw SchemaError("/hjb/nodes", "expected an integer or one count per axis");
    }
  }
  try {
    return GridSpec(domain, nodes);
  } catch (const std::invalid_argument& e) {
    throw SchemaError("/hjb", e.what());
  }
}

SolveOptions solve_options(const json& h, const RunOverrides& o) {
  SolveOptions s;
  s.step = positive_or(h, "step", "/hjb", s.step);
  s.tolerance = positive_or(h, "tolerance", "/hjb", s.tolerance);
  s.threads = o.threads;
  return s;
}

RunOutcome cmd_solve(const json& doc, const Model& model, std::uint64_t seed,
                     const RunOverrides& o) {
  const json& h = schema::member(doc, "hjb", "");
  const std::string equation = schema::string(h, "equation", "/hjb");
  const GridSpec grid = grid_spec(h, model);
  const SolveOptions opts = solve_options(h, o);
  RunningCost cost;
  Optimize opt = Optimize::Min;
  if (equation == "viability" || equation == "invariance") {
    const ModeBoxSet k = required_set(doc, "set", model);
    cost = [k](const HybridState& s) { return k.capped_distance(s); };
    if (equation == "invariance") opt = Optimize::Max;
  } else if (equation == "reach") {
    cost = reach_cost(required_set(doc, "target", model));
  } else {
    throw SchemaError("/hjb/equation",
                      "unknown equation '" + equation + "' (expected viability, invariance, reach)");
  }
  SolveResult solved = [&] {
    try {
      return solve_discounted(model.chars, cost, opt, grid, opts);
    } catch (const SolveError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw SchemaError("/hjb", e.what());
    }
  }();
  json values = json::array();
  if (h.contains("probes") || doc.contains("start")) {
    for (const auto& s : probes(h, "/hjb", doc, model, seed)) {
      if (!grid.domain.contains(s)) throw SchemaError("/hjb/probes", "probe lies outside the grid domain");
      values.push_back({{"state", state_json(s)}, {"value", solved.value.interpolate(s)}});
    }
  }
  RunOutcome out;
  out.artifacts["grid.json"] = solved.value.to_json().dump() + "\n";
  std::ostringstream csv;
  solved.value.write_csv(csv);
  out.artifacts["grid.csv"] = csv.str();
  if (grid.dim() == 1) {
    PlotStyle style;
    style.x_label = "x_1";
    style.y_label = "value";
    style.title = equation + " value function";
    out.artifacts["grid.svg"] = plot_grid(solved.value, style);
  }
  out.artifacts["solve.json"] = dump({{"schema", "pdmpv.solve/1"},
                                      {"equation", equation},
                                      {"optimize", opt == Optimize::Min ? "min" : "max"},
                                      {"report", solved.report.to_json()},
                                      {"probes", values}});
  out.summary = "converged in " + std::to_string(solved.report.iterations) + " iterations";
  return out;
}

RunOutcome cmd_reach(const json& doc, const Model& model, std::uint64_t seed,
                     const RunOverrides& o) {
  const json& h = schema::member(doc, "hjb", "");
  const json& r = section(doc, "reach");
  const ModeBoxSet target = required_set(doc, "target", model);
  const GridSpec grid = grid_spec(h, model);
  const HybridState start = parse_state(schema::member(doc, "start", ""), "/start", model, seed, 0);
  if (!grid.domain.contains(start)) throw SchemaError("/start", "start lies outside the grid domain");
  ReachOptions opts;
  opts.solve = solve_options(h, o);
  opts.margin = r.contains("margin") ? schema::number(r, "margin", "/reach") : opts.margin;
  opts.audit_functions = count_or(r, "audit_functions", "/reach", opts.audit_functions);
  opts.audit_seed = seed;
  opts.audit_slack = positive_or(r, "audit_slack", "/reach", opts.audit_slack);
  if (r.contains("monte_carlo")) {
    opts.monte_carlo = mc_config(r.at("monte_carlo"), "/reach/monte_carlo", seed, o);
  }
  ReachDecision d = [&] {
    try {
      return decide_reachability(model.chars, target, start, grid, opts);
    } catch (const SolveError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw SchemaError("/hjb", e.what());
    }
  }();
  json j = d.to_json();
  j["schema"] = "pdmpv.reach/1";
  j["start"] = state_json(start);
  j["target"] = target.to_json();
  RunOutcome out;
  out.exit_code = d.reachable ? kExitSuccess : kExitCheckFailed;
  out.artifacts["reach.json"] = dump(j);
  out.summary = d.verdict() + " (v0 = " + format_double(d.value) + ")";
  return out;
}

std::string unescape_pointer(std::string token) {
  for (std::size_t p = 0; (p = token.find("~1", p)) != std::string::npos;) token.replace(p, 2, "/");
  for (std::size_t p = 0; (p = token.find("~0", p)) != std::string::npos;) token.replace(p, 2, "~");
  return token;
}

}  // namespace

const std::vector<std::string>& scenario_commands() {
  static const std::vector<std::string> commands{"simulate",   "check-invariance", "check-viability",
                                                 "value",      "solve-hjb",        "reach",
                                                 "plot"};
  return commands;
}

RunOutcome execute_scenario(const std::string& command, const json& doc,
                            const RunOverrides& overrides) {
  try {
    if (!doc.is_object()) throw SchemaError("", "a scenario must be a JSON object");
    const std::string tag = schema::string(doc, "schema", "");
    if (tag != "pdmpv.scenario/1") throw SchemaError("/schema", "unsupported scenario schema '" + tag + "'");
    const Model model = parse_model(doc);
    const std::uint64_t seed = scenario_seed(doc, overrides);
    if (command == "simulate") return cmd_simulate(doc, model, seed, true);
    if (command == "plot") return cmd_simulate(doc, model, seed, false);
    if (command == "check-invariance") return cmd_check(doc, model, true);
    if (command == "check-viability") return cmd_check(doc, model, false);
    if (command == "value") return cmd_value(doc, model, seed, overrides);
    if (command == "solve-hjb") return cmd_solve(doc, model, seed, overrides);
    if (command == "reach") return cmd_reach(doc, model, seed, overrides);
    throw ConfigError("unknown command '" + command + "'");
  } catch (const SchemaError& e) {
    throw ConfigError(e.what(), e.path());
  } catch (const NetworkError& e) {
    throw ConfigError(e.what(), "/model");
  }
}

std::size_t locate_line(const std::string& text, const std::string& path) {
  std::size_t pos = 0;
  bool found = false;
  std::size_t start = 1;
  while (start <= path.size()) {
    const std::size_t end = std::min(path.find('/', start), path.size());
    const std::string token = unescape_pointer(path.substr(start, end - start));
    start = end + 1;
    if (token.empty() || std::all_of(token.begin(), token.end(), ::isdigit)) continue;
    const std::size_t hit = text.find("\"" + token + "\"", pos);
    if (hit == std::string::npos) break;
    pos = hit;
    found = true;
  }
  if (!found) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + pos, '\n'));
}

int run_scenario(const std::string& command, const std::string& scenario_path,
                 const std::string& out_dir, const RunOverrides& overrides, std::ostream& log,
                 std::ostream& err) {
  std::ifstream in(scenario_path, std::ios::binary);
  if (!in) {
    err << "error: cannot read scenario '" << scenario_path << "'\n";
    return kExitConfigError;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line =
        1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
    err << "error: " << scenario_path << ":" << line << ": malformed JSON: " << e.what() << "\n";
    return kExitConfigError;
  }
  RunOutcome outcome;
  try {
    outcome = execute_scenario(command, doc, overrides);
  } catch (const ConfigError& e) {
    const std::size_t line = locate_line(text, e.path());
    err << "error: " << scenario_path;
    if (line > 0) err << ":" << line;
    err << ": " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << command << " failed: " << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, contents] : outcome.artifacts) {
      const auto path = std::filesystem::path(out_dir) / name;
      std::ofstream f(path, std::ios::binary);
      f << contents;
      if (!f) throw std::runtime_error("cannot write " + path.string());
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  log << command << ": " << outcome.summary << "\n";
  for (const auto& [name, contents] : outcome.artifacts) {
    log << "  wrote " << (std::filesystem::path(out_dir) / name).string() << "\n";
  }
  return outcome.exit_code;
}

}  // namespace pdmpv
