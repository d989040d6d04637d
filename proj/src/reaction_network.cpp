#include "pdmpv/reaction_network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <set>

#include "pdmpv/schema.hpp"

namespace pdmpv {

std::vector<int> Reaction::stoichiometry() const {
  std::vector<int> theta(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    theta[i] = static_cast<int>(beta[i]) - static_cast<int>(alpha[i]);
  }
  return theta;
}

double SmoothingProfile::chi(double y) const noexcept {
  if (y <= 1.0) return 0.0;
  if (y >= 1.0 + err) return 1.0;
  const double s = (y - 1.0) / err;
  return s * s * (3.0 - 2.0 * s);
}

ReactionNetwork::ReactionNetwork(std::vector<Species> species,
                                 std::vector<Reaction> reactions,
                                 SmoothingProfile smoothing,
                                 std::vector<unsigned> initial_discrete)
    : species_(std::move(species)),
      reactions_(std::move(reactions)),
      smoothing_(smoothing),
      initial_discrete_(std::move(initial_discrete)) {
  if (species_.empty()) throw NetworkError("a network needs at least one species");
  std::set<std::string> names;
  for (std::size_t i = 0; i < species_.size(); ++i) {
    if (!names.insert(species_[i].name).second) {
      throw NetworkError("duplicate species name '" + species_[i].name + "'");
    }
    (species_[i].kind == SpeciesKind::Continuous ? continuous_ : discrete_).push_back(i);
  }
  if (!(smoothing_.err > 0.0)) throw NetworkError("smoothing err must be positive");
  if (!(smoothing_.cap > 0.0)) throw NetworkError("propensity cap must be positive");
  if (initial_discrete_.empty()) initial_discrete_.assign(discrete_.size(), 0);
  if (initial_discrete_.size() != discrete_.size()) {
    throw NetworkError("initial discrete configuration needs one count per discrete species");
  }
  const std::size_t n = species_.size();
  for (std::size_t r = 0; r < reactions_.size(); ++r) {
    const Reaction& rx = reactions_[r];
    const std::string who = "reaction " + std::to_string(r);
    if (rx.alpha.size() != n || rx.beta.size() != n) {
      throw NetworkError(who + ": alpha and beta need one entry per species");
    }
    if (!(rx.rate > 0.0) || !std::isfinite(rx.rate)) {
      throw NetworkError(who + ": rate must be positive");
    }
    const auto theta = rx.stoichiometry();
    const bool moves = std::any_of(theta.begin(), theta.end(), [](int v) { return v != 0; });
    if (rx.klass == ReactionClass::Jump && !moves) {
      throw NetworkError(who + ": a jump reaction must change the state");
    }
    if (rx.klass == ReactionClass::Flow) {
      for (std::size_t i : discrete_) {
        if (theta[i] != 0) {
          throw NetworkError(who + ": a flow reaction cannot change discrete species '" +
                             species_[i].name + "'");
        }
      }
    }
  }
}

namespace {

SpeciesKind parse_kind(const nlohmann::json& v, const std::string& path) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "continuous") return SpeciesKind::Continuous;
    if (s == "discrete") return SpeciesKind::Discrete;
  }
  throw SchemaError(path, "kind must be \"continuous\" or \"discrete\"");
}

ReactionClass parse_class(const nlohmann::json& v, const std::string& path) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "flow") return ReactionClass::Flow;
    if (s == "jump") return ReactionClass::Jump;
  }
  throw SchemaError(path, "class must be \"flow\" or \"jump\"");
}

std::vector<unsigned> parse_counts(const nlohmann::json& v, std::size_t n,
                                   const std::string& path) {
  if (!v.is_array()) throw SchemaError(path, "expected an array of counts");
  if (v.size() != n) {
    throw SchemaError(path, "expected " + std::to_string(n) + " entries, one per species");
  }
  std::vector<unsigned> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(static_cast<unsigned>(schema::unsigned_integer(v[i], schema::child(path, i))));
  }
  return out;
}

}  // namespace

ReactionNetwork ReactionNetwork::from_json(const nlohmann::json& doc) {
  const std::string root;
  const auto& species_json = schema::array(doc, "species", root);
  std::vector<Species> species;
  for (std::size_t i = 0; i < species_json.size(); ++i) {
    const std::string p = schema::child("/species", i);
    Species s;
    s.name = schema::string(species_json[i], "name", p);
    s.kind = parse_kind(schema::member(species_json[i], "kind", p), p + "/kind");
    species.push_back(std::move(s));
  }
  const auto& reactions_json = schema::array(doc, "reactions", root);
  std::vector<Reaction> reactions;
  for (std::size_t r = 0; r < reactions_json.size(); ++r) {
    const std::string p = schema::child("/reactions", r);
    const auto& rj = reactions_json[r];
    Reaction rx;
    rx.alpha = parse_counts(schema::member(rj, "alpha", p), species.size(), p + "/alpha");
    rx.beta = parse_counts(schema::member(rj, "beta", p), species.size(), p + "/beta");
    rx.rate = schema::positive(rj, "rate", p);
    rx.klass = parse_class(schema::member(rj, "class", p), p + "/class");
    if (rj.contains("label") && rj.at("label").is_string()) rx.label = rj.at("label");
    reactions.push_back(std::move(rx));
  }
  SmoothingProfile smoothing;
  if (doc.contains("smoothing")) {
    const auto& sj = doc.at("smoothing");
    smoothing.err = schema::number_or(sj, "err", "/smoothing", smoothing.err);
    smoothing.cap = schema::number_or(sj, "cap", "/smoothing", smoothing.cap);
    if (!(smoothing.err > 0.0)) throw SchemaError("/smoothing/err", "must be positive");
    if (!(smoothing.cap > 0.0)) throw SchemaError("/smoothing/cap", "must be positive");
  }
  std::vector<unsigned> initial;
  if (doc.contains("initial")) {
    const auto& ij = doc.at("initial");
    if (!ij.is_object()) throw SchemaError("/initial", "expected an object of counts");
    for (const auto& s : species) {
      if (s.kind != SpeciesKind::Discrete) continue;
      unsigned count = 0;
      if (ij.contains(s.name)) {
        count = static_cast<unsigned>(
            schema::unsigned_integer(ij.at(s.name), "/initial/" + s.name));
      }
      initial.push_back(count);
    }
    for (const auto& [key, value] : ij.items()) {
      const bool known = std::any_of(species.begin(), species.end(), [&](const Species& s) {
        return s.name == key && s.kind == SpeciesKind::Discrete;
      });
      if (!known) throw SchemaError("/initial/" + key, "not a discrete species");
    }
  }
  try {
    return ReactionNetwork(std::move(species), std::move(reactions), smoothing,
                           std::move(initial));
  } catch (const NetworkError& e) {
    throw SchemaError("", e.what());
  }
}

nlohmann::json ReactionNetwork::to_json() const {
  nlohmann::json doc;
  doc["species"] = nlohmann::json::array();
  for (const auto& s : species_) {
    doc["species"].push_back(
        {{"name", s.name}, {"kind", s.kind == SpeciesKind::Continuous ? "continuous" : "discrete"}});
  }
  doc["reactions"] = nlohmann::json::array();
  for (const auto& r : reactions_) {
    nlohmann::json rj{{"alpha", r.alpha},
                      {"beta", r.beta},
                      {"rate", r.rate},
                      {"class", r.klass == ReactionClass::Flow ? "flow" : "jump"}};
    if (!r.label.empty()) rj["label"] = r.label;
    doc["reactions"].push_back(std::move(rj));
  }
  doc["smoothing"] = {{"err", smoothing_.err}, {"cap", smoothing_.cap}};
  nlohmann::json initial = nlohmann::json::object();
  for (std::size_t k = 0; k < discrete_.size(); ++k) {
    initial[species_[discrete_[k]].name] = initial_discrete_[k];
  }
  doc["initial"] = std::move(initial);
  return doc;
}

namespace {

double falling_factorial(double count, unsigned order) {
  double out = 1.0;
  for (unsigned j = 0; j < order; ++j) out *= std::max(0.0, count - j);
  return out;
}

double reactant_factor(const ReactionNetwork& net, const Reaction& rx, std::size_t i,
                       double value) {
  const unsigned a = rx.alpha[i];
  const double v = std::max(0.0, value);
  if (net.species()[i].kind == SpeciesKind::Discrete) return falling_factorial(v, a);
  double f = std::pow(v, static_cast<double>(a));
  if (rx.klass == ReactionClass::Jump) f *= net.smoothing().chi(v / a);
  return f;
}

}  // namespace

double propensity(const ReactionNetwork& net, std::size_t r, std::span<const double> x) {
  if (r >= net.reactions().size()) throw std::out_of_range("reaction index out of range");
  if (x.size() != net.species_count()) {
    throw std::invalid_argument("state vector does not match the network dimension");
  }
  const Reaction& rx = net.reactions()[r];
  double value = rx.rate;
  for (std::size_t i = 0; i < x.size() && value > 0.0; ++i) {
    if (rx.alpha[i] > 0) value *= reactant_factor(net, rx, i, x[i]);
  }
  return std::min(value, net.smoothing().cap);
}

std::vector<std::vector<unsigned>> enumerate_modes(const ReactionNetwork& net,
                                                   std::size_t max_modes) {
  const auto& disc = net.discrete_species();
  std::vector<std::vector<unsigned>> modes{net.initial_discrete()};
  std::map<std::vector<unsigned>, std::size_t> index{{net.initial_discrete(), 0}};
  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    const std::size_t m = queue.front();
    queue.pop_front();
    for (const auto& rx : net.reactions()) {
      if (rx.klass != ReactionClass::Jump) continue;
      std::vector<unsigned> next = modes[m];
      bool applicable = true;
      for (std::size_t k = 0; k < disc.size(); ++k) {
        const std::size_t i = disc[k];
        if (next[k] < rx.alpha[i]) { applicable = false; break; }
        next[k] = next[k] - rx.alpha[i] + rx.beta[i];
      }
      if (!applicable || index.contains(next)) continue;
      if (modes.size() >= max_modes) {
        throw NetworkError("discrete configuration space exceeds " +
                           std::to_string(max_modes) + " modes");
      }
      index.emplace(next, modes.size());
      modes.push_back(std::move(next));
      queue.push_back(modes.size() - 1);
    }
  }
  return modes;
}

double max_jump_radius(const ReactionNetwork& net) {
  double radius = 0.0;
  for (const auto& rx : net.reactions()) {
    if (rx.klass != ReactionClass::Jump) continue;
    double sq = 0.0;
    for (int t : rx.stoichiometry()) sq += static_cast<double>(t) * t;
    radius = std::max(radius, std::sqrt(sq));
  }
  return radius;
}

Vector species_vector(const ReactionNetwork& net,
                      const std::vector<std::vector<unsigned>>& modes,
                      const HybridState& state) {
  Vector full(net.species_count(), 0.0);
  const auto& cont = net.continuous_species();
  const auto& disc = net.discrete_species();
  for (std::size_t k = 0; k < cont.size(); ++k) full[cont[k]] = state.x.at(k);
  for (std::size_t k = 0; k < disc.size(); ++k) full[disc[k]] = modes.at(state.mode)[k];
  return full;
}

namespace {

struct Term {
  std::size_t species;
  unsigned order;
  bool discrete;
  std::size_t slot;  // position in the continuous vector or the mode counts
};

struct CompiledReaction {
  double rate;
  bool jump;
  std::vector<Term> reactants;
  std::vector<std::pair<std::size_t, double>> shift;  // continuous slot, theta
  std::vector<std::size_t> target_mode;               // per source mode, npos if inapplicable
};

struct CompiledNetwork {
  SmoothingProfile smoothing;
  std::vector<std::vector<unsigned>> modes;
  std::vector<CompiledReaction> reactions;
  std::size_t dim = 0;

  double propensity(const CompiledReaction& rx, std::size_t mode,
                    std::span<const double> x) const {
    double value = rx.rate;
    for (const Term& t : rx.reactants) {
      if (value <= 0.0) return 0.0;
      if (t.discrete) {
        value *= falling_factorial(modes[mode][t.slot], t.order);
      } else {
        const double v = std::max(0.0, x[t.slot]);
        double f = t.order == 1 ? v : std::pow(v, static_cast<double>(t.order));
        if (rx.jump) f *= smoothing.chi(v / t.order);
        value *= f;
      }
    }
    return std::min(value, smoothing.cap);
  }
};

}  // namespace

PdmpCharacteristics compile(const ReactionNetwork& net) {
  auto cn = std::make_shared<CompiledNetwork>();
  cn->smoothing = net.smoothing();
  cn->modes = enumerate_modes(net);
  cn->dim = net.continuous_species().size();
  const constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  std::vector<std::size_t> slot(net.species_count());
  for (std::size_t k = 0; k < net.continuous_species().size(); ++k) slot[net.continuous_species()[k]] = k;
  for (std::size_t k = 0; k < net.discrete_species().size(); ++k) slot[net.discrete_species()[k]] = k;
  std::map<std::vector<unsigned>, std::size_t> mode_index;
  for (std::size_t m = 0; m < cn->modes.size(); ++m) mode_index.emplace(cn->modes[m], m);

  std::size_t jump_count = 0;
  for (const auto& rx : net.reactions()) {
    CompiledReaction c;
    c.rate = rx.rate;
    c.jump = rx.klass == ReactionClass::Jump;
    jump_count += c.jump;
    const auto theta = rx.stoichiometry();
    for (std::size_t i = 0; i < net.species_count(); ++i) {
      const bool discrete = net.species()[i].kind == SpeciesKind::Discrete;
      if (rx.alpha[i] > 0) c.reactants.push_back({i, rx.alpha[i], discrete, slot[i]});
      if (!discrete && theta[i] != 0) c.shift.emplace_back(slot[i], theta[i]);
    }
    if (c.jump) {
      for (const auto& config : cn->modes) {
        std::vector<unsigned> next = config;
        bool ok = true;
        for (std::size_t k = 0; k < net.discrete_species().size(); ++k) {
          const std::size_t i = net.discrete_species()[k];
          if (next[k] < rx.alpha[i]) { ok = false; break; }
          next[k] = next[k] - rx.alpha[i] + rx.beta[i];
        }
        const auto it = ok ? mode_index.find(next) : mode_index.end();
        c.target_mode.push_back(it == mode_index.end() ? npos : it->second);
      }
    }
    cn->reactions.push_back(std::move(c));
  }

  PdmpCharacteristics chars;
  chars.mode_count = cn->modes.size();
  chars.dim = cn->dim;
  chars.rate_bound = cn->smoothing.cap * static_cast<double>(jump_count);
  chars.jump_radius = max_jump_radius(net);
  chars.flow = [cn](std::size_t mode, std::span<const double> x, std::span<const double>,
                    std::span<double> dx) {
    std::fill(dx.begin(), dx.end(), 0.0);
    for (const auto& rx : cn->reactions) {
      if (rx.jump) continue;
      const double p = cn->propensity(rx, mode, x);
      if (p == 0.0) continue;
      for (const auto& [s, th] : rx.shift) dx[s] += th * p;
    }
  };
  chars.rate = [cn](std::size_t mode, std::span<const double> x, std::span<const double>) {
    double total = 0.0;
    for (const auto& rx : cn->reactions) {
      if (rx.jump) total += cn->propensity(rx, mode, x);
    }
    return total;
  };
  chars.kernel = [cn](std::size_t mode, std::span<const double> x, std::span<const double>,
                      std::vector<KernelTarget>& out) {
    double total = 0.0;
    const std::size_t first = out.size();
    for (const auto& rx : cn->reactions) {
      if (!rx.jump) continue;
      const double p = cn->propensity(rx, mode, x);
      if (p <= 0.0 || rx.target_mode[mode] == npos) continue;
      KernelTarget t{p, {rx.target_mode[mode], Vector(x.begin(), x.end())}};
      for (const auto& [s, th] : rx.shift) t.target.x[s] += th;
      out.push_back(std::move(t));
      total += p;
    }
    for (std::size_t k = first; k < out.size(); ++k) out[k].weight /= total;
  };
  return chars;
}

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool grows(double previous, double current) {
  return current > 1.25 * previous + 1e-12;
}

}  // namespace

AssumptionReport validate_assumptions(const PdmpCharacteristics& chars,
                                      const ProbeSpec& probe) {
  if (probe.lo.size() != chars.dim || probe.hi.size() != chars.dim) {
    throw std::invalid_argument("probe box does not match the state dimension");
  }
  if (probe.pairs == 0 || probe.scales.empty()) {
    throw std::invalid_argument("probe needs at least one pair and one scale");
  }
  AssumptionReport report;
  CounterRng rng(probe.seed);
  const std::size_t n = chars.dim;
  Vector x(n), y(n), fx(n), fy(n), dir(n);
  double diameter = 0.0;
  for (std::size_t i = 0; i < n; ++i) diameter += std::pow(probe.hi[i] - probe.lo[i], 2);
  diameter = std::sqrt(diameter);
  const double delta = 1e-6 * std::max(1.0, diameter);
  double max_displacement = 0.0;
  std::vector<KernelTarget> targets;

  for (double scale : probe.scales) {
    RegionEstimate est;
    est.scale = scale;
    for (std::size_t mode = 0; mode < chars.mode_count; ++mode) {
      for (const auto& u : probe.controls) {
        for (std::size_t k = 0; k < probe.pairs; ++k) {
          for (std::size_t i = 0; i < n; ++i) {
            const double c = 0.5 * (probe.lo[i] + probe.hi[i]);
            const double w = 0.5 * (probe.hi[i] - probe.lo[i]) * scale;
            x[i] = c + w * (2.0 * rng.uniform() - 1.0);
            dir[i] = 2.0 * rng.uniform() - 1.0;
          }
          const double dn = norm(dir);
          for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + delta * (dn > 0 ? dir[i] / dn : 0.0);
          chars.flow(mode, x, u, fx);
          chars.flow(mode, y, u, fy);
          const double rx = chars.rate(mode, x, u);
          const double ry = chars.rate(mode, y, u);
          for (std::size_t i = 0; i < n; ++i) fy[i] -= fx[i];
          est.sup_flow = std::max(est.sup_flow, norm(fx));
          est.lipschitz_flow = std::max(est.lipschitz_flow, norm(fy) / delta);
          est.sup_rate = std::max(est.sup_rate, rx);
          est.lipschitz_rate = std::max(est.lipschitz_rate, std::abs(ry - rx) / delta);
          if (rx > chars.rate_bound * (1.0 + 1e-12)) report.a2_bounded = false;
          if (rx > 0.0) {
            targets.clear();
            chars.kernel(mode, x, u, targets);
            double total = 0.0;
            bool positive = !targets.empty();
            for (const auto& t : targets) {
              total += t.weight;
              positive = positive && t.weight > 0.0;
              if (t.target.mode == mode && t.target.x == x) positive = false;
              Vector d(n);
              for (std::size_t i = 0; i < n; ++i) d[i] = t.target.x[i] - x[i];
              max_displacement = std::max(max_displacement, norm(d));
            }
            if (!positive || std::abs(total - 1.0) > 1e-12) report.a4_finite_mixture = false;
          }
        }
      }
    }
    report.regions.push_back(est);
  }

  for (std::size_t k = 1; k < report.regions.size(); ++k) {
    const auto& a = report.regions[k - 1];
    const auto& b = report.regions[k];
    if (k + 1 == report.regions.size()) {
      if (grows(a.sup_flow, b.sup_flow) || grows(a.lipschitz_flow, b.lipschitz_flow)) {
        report.a1_bounded = false;
        report.flags.push_back("A1: flow estimates grow across nested probe regions");
      }
      if (grows(a.sup_rate, b.sup_rate) || grows(a.lipschitz_rate, b.lipschitz_rate)) {
        report.a2_bounded = false;
        report.flags.push_back("A2: rate estimates grow across nested probe regions");
      }
    }
  }
  if (!report.a2_bounded && report.flags.empty()) {
    report.flags.push_back("A2: sampled rate exceeds the declared rate bound");
  }
  if (!report.a4_finite_mixture) {
    report.flags.push_back("A4: a kernel is not a finite probability mixture off the source");
  }
  report.a3_structural = std::isfinite(chars.rate_bound) && chars.rate_bound >= 0.0;
  if (!report.a3_structural) report.flags.push_back("A3': rate is not capped");
  if (chars.jump_radius) {
    report.a5_radius = *chars.jump_radius;
    report.a5_exact = true;
    report.a5_ok = max_displacement <= *chars.jump_radius + 1e-9;
    if (!report.a5_ok) report.flags.push_back("A5: a sampled jump exceeds the declared radius");
  } else {
    report.a5_radius = max_displacement;
    report.flags.push_back("A5: radius is a sampled estimate (no declared displacement bound)");
  }
  return report;
}

nlohmann::json AssumptionReport::to_json() const {
  nlohmann::json j;
  j["regions"] = nlohmann::json::array();
  for (const auto& r : regions) {
    j["regions"].push_back({{"scale", r.scale},
                            {"sup_flow", r.sup_flow},
                            {"lipschitz_flow", r.lipschitz_flow},
                            {"sup_rate", r.sup_rate},
                            {"lipschitz_rate", r.lipschitz_rate}});
  }
  j["a1_bounded"] = a1_bounded;
  j["a2_bounded"] = a2_bounded;
  j["a3_structural"] = a3_structural;
  j["a4_finite_mixture"] = a4_finite_mixture;
  j["a5_radius"] = a5_radius;
  j["a5_exact"] = a5_exact;
  j["a5_ok"] = a5_ok;
  j["flags"] = flags;
  j["pass"] = passes();
  j["note"] = "sampled constants are numerical evidence, not proof";
  return j;
}

}  // namespace pdmpv
