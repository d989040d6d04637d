#include "pdmpv/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pdmpv/schema.hpp"

namespace pdmpv {

PiecewiseLinear::PiecewiseLinear(Vector knots_, Vector values_)
    : knots(std::move(knots_)), values(std::move(values_)) {
  if (knots.empty() || knots.size() != values.size()) {
    throw std::invalid_argument("piecewise-linear data needs matching, nonempty knots and values");
  }
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!std::isfinite(knots[i]) || !std::isfinite(values[i])) {
      throw std::invalid_argument("piecewise-linear data must be finite");
    }
    if (i > 0 && !(knots[i] > knots[i - 1])) {
      throw std::invalid_argument("piecewise-linear knots must increase strictly");
    }
  }
}

double PiecewiseLinear::operator()(double x) const {
  if (x <= knots.front()) return values.front();
  if (x >= knots.back()) return values.back();
  const auto it = std::upper_bound(knots.begin(), knots.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - knots.begin());
  const double t = (x - knots[k - 1]) / (knots[k] - knots[k - 1]);
  return values[k - 1] + t * (values[k] - values[k - 1]);
}

nlohmann::json PiecewiseLinear::to_json() const {
  return {{"knots", knots}, {"values", values}};
}

PiecewiseLinear PiecewiseLinear::from_json(const nlohmann::json& j, const std::string& path) {
  Vector k = schema::numbers(schema::member(j, "knots", path), path + "/knots");
  Vector v = schema::numbers(schema::member(j, "values", path), path + "/values");
  try {
    return PiecewiseLinear(std::move(k), std::move(v));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path, e.what());
  }
}

OnOffParams OnOffParams::from_json(const nlohmann::json& j, const std::string& path) {
  OnOffParams p;
  const PiecewiseLinear r0 = PiecewiseLinear::from_json(schema::member(j, "r0", path), path + "/r0");
  const PiecewiseLinear r1 = PiecewiseLinear::from_json(schema::member(j, "r1", path), path + "/r1");
  p.r0 = r0;
  p.r1 = r1;
  p.lambda0 = schema::number(j, "lambda0", path);
  p.lambda1 = schema::number(j, "lambda1", path);
  if (p.lambda0 < 0.0) throw SchemaError(path + "/lambda0", "must be nonnegative");
  if (p.lambda1 < 0.0) throw SchemaError(path + "/lambda1", "must be nonnegative");
  p.alpha_max = schema::positive(j, "alpha_max", path);
  p.description = {{"r0", r0.to_json()},
                   {"r1", r1.to_json()},
                   {"lambda0", p.lambda0},
                   {"lambda1", p.lambda1},
                   {"alpha_max", p.alpha_max}};
  return p;
}

OnOffParams CookParams::onoff() const {
  OnOffParams p;
  const double kp_ = kp, Jp_ = Jp;
  p.r0 = [kp_](double x) { return kp_ * x; };
  p.r1 = [kp_, Jp_](double x) { return Jp_ - kp_ * x; };
  p.lambda0 = ka;
  p.lambda1 = kd;
  p.alpha_max = alpha_max();
  p.description = to_json();
  return p;
}

ModeBoxSet CookParams::invariant_set() const {
  return ModeBoxSet({0, 1}, {0.0}, {alpha_max()});
}

nlohmann::json CookParams::to_json() const {
  return {{"ka", ka}, {"kd", kd}, {"Jp", Jp}, {"kp", kp}};
}

CookParams CookParams::from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  CookParams p;
  auto rate = [&](const char* key, double& out) {
    if (j.contains(key)) out = schema::positive(j, key, path);
  };
  rate("ka", p.ka);
  rate("kd", p.kd);
  rate("Jp", p.Jp);
  rate("kp", p.kp);
  return p;
}

double PhageParams::epsilon_max() const {
  return std::min(kd * kd / (4.0 * k1 * k_1), 1.0);
}

ModeBoxSet PhageParams::k_epsilon(double eps) const {
  return ModeBoxSet({0}, {0.0, 0.0}, {2.0 * k_1 * eps / kd, eps});
}

nlohmann::json PhageParams::to_json() const {
  return {{"k1", k1}, {"k_1", k_1}, {"k2", k2}, {"k_2", k_2}, {"k3", k3}, {"k_3", k_3},
          {"k4", k4}, {"k_4", k_4}, {"kt", kt}, {"kd", kd}, {"n", n},     {"err", err},
          {"cap", cap}};
}

PhageParams PhageParams::from_json(const nlohmann::json& j, const std::string& path) {
  PhageParams p;
  auto rate = [&](const char* key, double& out) {
    if (j.is_object() && j.contains(key)) out = schema::positive(j, key, path);
  };
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  rate("k1", p.k1);
  rate("k_1", p.k_1);
  rate("k2", p.k2);
  rate("k_2", p.k_2);
  rate("k3", p.k3);
  rate("k_3", p.k_3);
  rate("k4", p.k4);
  rate("k_4", p.k_4);
  rate("kt", p.kt);
  rate("kd", p.kd);
  rate("err", p.err);
  rate("cap", p.cap);
  if (j.contains("n")) {
    p.n = static_cast<unsigned>(schema::unsigned_integer(j.at("n"), path + "/n"));
    if (p.n == 0) throw SchemaError(path + "/n", "must be positive");
  }
  return p;
}

PdmpCharacteristics build_onoff(const OnOffParams& p) {
  if (!p.r0 || !p.r1) throw std::invalid_argument("On/Off model needs both r0 and r1");
  if (p.lambda0 < 0.0 || p.lambda1 < 0.0) throw std::invalid_argument("On/Off rates must be nonnegative");
  PdmpCharacteristics c;
  c.mode_count = 2;
  c.dim = 1;
  c.rate_bound = std::max(p.lambda0, p.lambda1);
  c.jump_radius = 1.0;
  c.rate_depends_on_mode_only = true;
  c.flow = [r0 = p.r0, r1 = p.r1](std::size_t mode, std::span<const double> x,
                                  std::span<const double>, std::span<double> dx) {
    dx[0] = mode == 0 ? -r0(x[0]) : r1(x[0]);
  };
  c.rate = [l0 = p.lambda0, l1 = p.lambda1](std::size_t mode, std::span<const double>,
                                            std::span<const double>) {
    return mode == 0 ? l0 : l1;
  };
  c.kernel = [](std::size_t mode, std::span<const double> x, std::span<const double>,
                std::vector<KernelTarget>& out) {
    out.push_back({1.0, {1 - mode, Vector(x.begin(), x.end())}});
  };
  return c;
}

PdmpCharacteristics build_cook(const CookParams& p) {
  PdmpCharacteristics c = build_onoff(p.onoff());
  c.flow = [kp = p.kp, Jp = p.Jp](std::size_t mode, std::span<const double> x,
                                  std::span<const double>, std::span<double> dx) {
    dx[0] = mode == 0 ? -kp * x[0] : Jp - kp * x[0];
  };
  return c;
}

ReactionNetwork cook_network(const CookParams& p) {
  using SK = SpeciesKind;
  using RC = ReactionClass;
  std::vector<Species> species{{"Goff", SK::Discrete}, {"Gon", SK::Discrete}, {"P", SK::Continuous}};
  std::vector<Reaction> reactions{
      {{1, 0, 0}, {0, 1, 0}, p.ka, RC::Jump, "activation"},
      {{0, 1, 0}, {1, 0, 0}, p.kd, RC::Jump, "deactivation"},
      {{0, 1, 0}, {0, 1, 1}, p.Jp, RC::Flow, "production"},
      {{0, 0, 1}, {0, 0, 0}, p.kp, RC::Flow, "degradation"},
  };
  return ReactionNetwork(std::move(species), std::move(reactions), {}, {1, 0});
}

ReactionNetwork phage_network(const PhageParams& p) {
  using SK = SpeciesKind;
  using RC = ReactionClass;
  // species order: X, X2, D, DX2, DX2*, DX2X2
  std::vector<Species> species{{"X", SK::Continuous},  {"X2", SK::Continuous},
                               {"D", SK::Discrete},    {"DX2", SK::Discrete},
                               {"DX2s", SK::Discrete}, {"DX2X2", SK::Discrete}};
  std::vector<Reaction> reactions{
      {{2, 0, 0, 0, 0, 0}, {0, 1, 0, 0, 0, 0}, p.k1, RC::Flow, "dimerization"},
      {{0, 1, 0, 0, 0, 0}, {2, 0, 0, 0, 0, 0}, p.k_1, RC::Flow, "dissociation"},
      {{1, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0}, p.kd, RC::Flow, "degradation"},
      {{0, 1, 1, 0, 0, 0}, {0, 0, 0, 1, 0, 0}, p.k2, RC::Jump, "bind OR2"},
      {{0, 1, 1, 0, 0, 0}, {0, 0, 0, 0, 1, 0}, p.k3, RC::Jump, "bind OR3"},
      {{0, 1, 0, 1, 0, 0}, {0, 0, 0, 0, 0, 1}, p.k4, RC::Jump, "bind second site"},
      {{0, 0, 0, 1, 0, 0}, {p.n, 0, 0, 1, 0, 0}, p.kt, RC::Jump, "transcription"},
      {{0, 0, 0, 1, 0, 0}, {0, 1, 1, 0, 0, 0}, p.k_2, RC::Jump, "unbind OR2"},
      {{0, 0, 0, 0, 1, 0}, {0, 1, 1, 0, 0, 0}, p.k_3, RC::Jump, "unbind OR3"},
      {{0, 0, 0, 0, 0, 1}, {0, 1, 0, 1, 0, 0}, p.k_4, RC::Jump, "unbind second site"},
  };
  return ReactionNetwork(std::move(species), std::move(reactions), SmoothingProfile{p.err, p.cap},
                         {1, 0, 0, 0});
}

PdmpCharacteristics build_phage(const PhageParams& p) { return compile(phage_network(p)); }

const std::vector<std::string>& phage_mode_names() {
  static const std::vector<std::string> names{"e1", "e2", "e3", "e4"};
  return names;
}

}  // namespace pdmpv
