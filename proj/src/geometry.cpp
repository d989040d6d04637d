#include "pdmpv/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

#include "pdmpv/schema.hpp"

namespace pdmpv {

ModeBoxSet::ModeBoxSet(std::vector<std::size_t> modes, Vector lo, Vector hi)
    : modes_(std::move(modes)), lo_(std::move(lo)), hi_(std::move(hi)) {
  std::sort(modes_.begin(), modes_.end());
  modes_.erase(std::unique(modes_.begin(), modes_.end()), modes_.end());
  if (modes_.empty()) throw std::invalid_argument("a mode-box set needs at least one mode");
  if (lo_.size() != hi_.size()) throw std::invalid_argument("box bounds differ in dimension");
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (std::isnan(lo_[i]) || std::isnan(hi_[i]) || lo_[i] > hi_[i]) {
      throw std::invalid_argument("box bounds must satisfy lo <= hi on every axis");
    }
  }
}

ModeBoxSet ModeBoxSet::everything(std::size_t mode_count, std::size_t dim) {
  std::vector<std::size_t> modes(mode_count);
  for (std::size_t m = 0; m < mode_count; ++m) modes[m] = m;
  return ModeBoxSet(std::move(modes), Vector(dim, -HUGE_VAL), Vector(dim, HUGE_VAL));
}

bool ModeBoxSet::has_mode(std::size_t mode) const {
  return std::binary_search(modes_.begin(), modes_.end(), mode);
}

bool ModeBoxSet::contains(const HybridState& s) const {
  if (!has_mode(s.mode)) return false;
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (s.x[i] < lo_[i] || s.x[i] > hi_[i]) return false;
  }
  return true;
}

bool ModeBoxSet::interior_contains(const HybridState& s) const {
  if (!has_mode(s.mode)) return false;
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (!(s.x[i] > lo_[i] && s.x[i] < hi_[i])) return false;
  }
  return true;
}

bool ModeBoxSet::bounded() const {
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (!std::isfinite(lo_[i]) || !std::isfinite(hi_[i])) return false;
  }
  return true;
}

double ModeBoxSet::capped_distance(const HybridState& s) const {
  return capped_distance(s.mode, s.x);
}

double ModeBoxSet::capped_distance(std::size_t mode, std::span<const double> x) const {
  if (!has_mode(mode)) return 1.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    const double d = std::max({lo_[i] - x[i], 0.0, x[i] - hi_[i]});
    sq += d * d;
  }
  return sq >= 1.0 ? 1.0 : std::sqrt(sq);
}

double ModeBoxSet::capped_distance_to_complement(std::size_t mode,
                                                 std::span<const double> x) const {
  if (!has_mode(mode)) return 0.0;
  double d = 1.0;
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    d = std::min({d, x[i] - lo_[i], hi_[i] - x[i]});
  }
  return std::max(d, 0.0);
}

namespace {

nlohmann::json bound_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

nlohmann::json ModeBoxSet::to_json() const {
  nlohmann::json lo = nlohmann::json::array(), hi = nlohmann::json::array();
  for (double v : lo_) lo.push_back(bound_json(v));
  for (double v : hi_) hi.push_back(bound_json(v));
  return {{"modes", modes_}, {"lo", lo}, {"hi", hi}};
}

ModeBoxSet ModeBoxSet::from_json(const nlohmann::json& j, const std::string& path) {
  const auto& modes_json = schema::array(j, "modes", path);
  std::vector<std::size_t> modes;
  for (std::size_t k = 0; k < modes_json.size(); ++k) {
    modes.push_back(schema::unsigned_integer(modes_json[k], schema::child(path + "/modes", k)));
  }
  const Vector lo = schema::numbers(schema::member(j, "lo", path), path + "/lo");
  const Vector hi = schema::numbers(schema::member(j, "hi", path), path + "/hi");
  try {
    return ModeBoxSet(std::move(modes), lo, hi);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path, e.what());
  }
}

NormalCone normal_cone(const ModeBoxSet& set, const HybridState& s) {
  if (!set.has_mode(s.mode) || set.capped_distance(s) > kFaceTolerance) {
    throw std::invalid_argument("normal cone requested at a point outside the set");
  }
  NormalCone cone;
  const std::size_t n = set.dim();
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isfinite(set.lo()[i]) && std::abs(s.x[i] - set.lo()[i]) <= kFaceTolerance) {
      Vector g(n, 0.0);
      g[i] = -1.0;
      cone.generators.push_back(std::move(g));
    }
    if (std::isfinite(set.hi()[i]) && std::abs(s.x[i] - set.hi()[i]) <= kFaceTolerance) {
      Vector g(n, 0.0);
      g[i] = 1.0;
      cone.generators.push_back(std::move(g));
    }
  }
  return cone;
}

double jump_escape_mass(const PdmpCharacteristics& chars, const ModeBoxSet& set,
                        const HybridState& s, std::span<const double> control) {
  const double rate = chars.rate(s.mode, s.x, control);
  if (!(rate > 0.0)) return 0.0;
  std::vector<KernelTarget> targets;
  chars.kernel(s.mode, s.x, control, targets);
  double outside = 0.0;
  for (const auto& t : targets) {
    if (!set.contains(t.target)) outside += t.weight;
  }
  return rate * outside;
}

namespace {

bool lex_less(const CheckViolation& a, const CheckViolation& b) {
  if (a.point != b.point) return a.point < b.point;
  if (a.mode != b.mode) return a.mode < b.mode;
  if (a.control != b.control) return a.control < b.control;
  return a.direction < b.direction;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Direction {
  Vector p;
  /// ||w||_1 / ||sum w g||: tolerance multiplier keeping generator-level
  /// tolerances consistent across conic combinations.
  double tolerance_scale = 1.0;
};

std::vector<Direction> sampled_directions(const NormalCone& cone, std::size_t per_pair) {
  const auto& g = cone.generators;
  std::vector<Direction> out;
  if (g.empty()) return out;
  const std::size_t n = g.front().size();
  auto add = [&](const std::vector<double>& w) {
    Vector p(n, 0.0);
    double l1 = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      l1 += w[k];
      for (std::size_t i = 0; i < n; ++i) p[i] += w[k] * g[k][i];
    }
    const double len = std::sqrt(dot(p, p));
    if (len < 1e-12) return;
    for (double& v : p) v /= len;
    for (const auto& d : out) {
      double diff = 0.0;
      for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(d.p[i] - p[i]));
      if (diff < 1e-12) return;
    }
    out.push_back({std::move(p), l1 / len});
  };
  if (g.size() == 1) {
    add({1.0});
  } else if (g.size() == 2) {
    const std::size_t m = std::max<std::size_t>(per_pair, 2);
    for (std::size_t j = 0; j < m; ++j) {
      const double angle = 0.5 * std::numbers::pi * static_cast<double>(j) / (m - 1);
      add({std::cos(angle), std::sin(angle)});
    }
  } else {
    // Weight lattice with 5 levels per generator.
    const std::size_t levels = 5, k = g.size();
    std::vector<std::size_t> idx(k, 0);
    while (true) {
      std::vector<double> w(k);
      bool any = false;
      for (std::size_t i = 0; i < k; ++i) {
        w[i] = static_cast<double>(idx[i]) / (levels - 1);
        any = any || idx[i] > 0;
      }
      if (any) add(w);
      std::size_t pos = 0;
      while (pos < k && ++idx[pos] == levels) idx[pos++] = 0;
      if (pos == k) break;
    }
  }
  return out;
}

/// Lattice over a bounded box. Calls visit(point, on_boundary).
template <typename Visit>
void for_each_lattice_point(const ModeBoxSet& set, std::size_t density, Visit&& visit) {
  const std::size_t n = set.dim();
  std::vector<std::size_t> counts(n), idx(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    counts[i] = set.lo()[i] == set.hi()[i] ? 1 : std::max<std::size_t>(density, 2);
  }
  Vector x(n);
  while (true) {
    bool boundary = n == 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = counts[i] == 1 ? 0.0 : static_cast<double>(idx[i]) / (counts[i] - 1);
      x[i] = idx[i] + 1 == counts[i] ? set.hi()[i] : set.lo()[i] + t * (set.hi()[i] - set.lo()[i]);
      if (idx[i] == 0 || idx[i] + 1 == counts[i]) boundary = true;
    }
    visit(x, boundary);
    std::size_t pos = 0;
    while (pos < n && ++idx[pos] == counts[pos]) idx[pos++] = 0;
    if (pos == n) break;
  }
}

void require_bounded(const ModeBoxSet& set, const PdmpCharacteristics& chars) {
  if (set.dim() != chars.dim) throw std::invalid_argument("set dimension does not match the model");
  if (!set.bounded()) {
    throw std::invalid_argument("boundary checks need a bounded set on every axis");
  }
  for (std::size_t m : set.modes()) {
    if (m >= chars.mode_count) throw std::invalid_argument("set names a mode the model lacks");
  }
}

std::size_t face_count(const ModeBoxSet& set) {
  std::size_t faces = 0;
  for (std::size_t i = 0; i < set.dim(); ++i) faces += set.lo()[i] == set.hi()[i] ? 1 : 2;
  return faces * set.modes().size();
}

}  // namespace

void merge_worst(std::optional<CheckViolation>& acc, const CheckViolation& candidate) {
  if (!acc || candidate.value > acc->value ||
      (candidate.value == acc->value && lex_less(candidate, *acc))) {
    acc = candidate;
  }
}

std::vector<Vector> cone_directions(const NormalCone& cone, std::size_t per_pair) {
  std::vector<Vector> out;
  for (auto& d : sampled_directions(cone, per_pair)) out.push_back(std::move(d.p));
  return out;
}

CheckReport check_invariance(const PdmpCharacteristics& chars, const ModeBoxSet& set,
                             const CheckResolution& resolution) {
  require_bounded(set, chars);
  CheckReport report;
  report.tolerance = resolution.tolerance;
  report.density = resolution.density;
  report.faces = face_count(set);
  report.note = "generator checks are exact for box cones; grid density limits coverage of the boundary";
  Vector f(chars.dim);
  for (std::size_t mode : set.modes()) {
    for_each_lattice_point(set, resolution.density, [&](const Vector& x, bool boundary) {
      const HybridState s{mode, x};
      NormalCone cone;
      if (boundary) {
        cone = normal_cone(set, s);
        ++report.boundary_points;
      } else {
        ++report.interior_points;
      }
      for (const auto& u : resolution.controls) {
        const double escape = jump_escape_mass(chars, set, s, u);
        if (escape > 0.0) report.pass = false;
        if (cone.generators.empty()) {
          merge_worst(report.worst, {x, mode, u, {}, escape});
          continue;
        }
        chars.flow(mode, x, u, f);
        for (const auto& g : cone.generators) {
          const double drift = dot(f, g);
          if (drift > resolution.tolerance) report.pass = false;
          merge_worst(report.worst, {x, mode, u, g, drift + escape});
        }
      }
    });
  }
  return report;
}

CheckReport check_viability(const PdmpCharacteristics& chars, const ModeBoxSet& set,
                            const CheckResolution& resolution) {
  require_bounded(set, chars);
  if (resolution.controls.empty()) throw std::invalid_argument("control grid is empty");
  CheckReport report;
  report.tolerance = resolution.tolerance;
  report.density = resolution.density;
  report.faces = face_count(set);
  report.note =
      "resolution-limited: inf over the control grid and sampled cone directions";
  Vector f(chars.dim);
  for (std::size_t mode : set.modes()) {
    for_each_lattice_point(set, resolution.density, [&](const Vector& x, bool boundary) {
      const HybridState s{mode, x};
      std::vector<double> escapes, drifts;
      std::vector<Vector> flows;
      for (const auto& u : resolution.controls) {
        escapes.push_back(jump_escape_mass(chars, set, s, u));
        chars.flow(mode, x, u, f);
        flows.push_back(f);
      }
      if (!boundary) {
        ++report.interior_points;
        std::size_t best = 0;
        for (std::size_t k = 1; k < escapes.size(); ++k) {
          if (escapes[k] < escapes[best]) best = k;
        }
        if (escapes[best] > resolution.tolerance) report.pass = false;
        merge_worst(report.worst, {x, mode, resolution.controls[best], {}, escapes[best]});
        return;
      }
      ++report.boundary_points;
      const auto directions = sampled_directions(normal_cone(set, s), resolution.cone_directions);
      for (const auto& d : directions) {
        std::size_t best = 0;
        double best_value = HUGE_VAL;
        for (std::size_t k = 0; k < flows.size(); ++k) {
          const double v = dot(flows[k], d.p) + escapes[k];
          if (v < best_value) { best_value = v; best = k; }
        }
        if (best_value > resolution.tolerance * d.tolerance_scale) report.pass = false;
        merge_worst(report.worst, {x, mode, resolution.controls[best], d.p, best_value});
      }
    });
  }
  return report;
}

nlohmann::json CheckReport::to_json() const {
  nlohmann::json j;
  j["pass"] = pass;
  if (worst) {
    j["worst"] = {{"point", worst->point},
                  {"mode", worst->mode},
                  {"control", worst->control},
                  {"direction", worst->direction},
                  {"value", worst->value}};
  } else {
    j["worst"] = nullptr;
  }
  j["grid"] = {{"faces", faces},
               {"density", density},
               {"boundary_points", boundary_points},
               {"interior_points", interior_points}};
  j["tolerance"] = tolerance;
  j["note"] = note;
  return j;
}

}  // namespace pdmpv
