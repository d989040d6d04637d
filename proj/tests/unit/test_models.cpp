#include <cmath>

#include "doctest.h"
#include "pdmpv/models.hpp"
#include "pdmpv/schema.hpp"

using namespace pdmpv;

TEST_CASE("Cook characteristics against the hand-written model") {
  const CookParams p{1.3, 0.7, 0.9, 0.6};
  const auto chars = build_cook(p);
  const auto compiled = compile(cook_network(p));
  CounterRng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t m = rng() % 2;
    const double x = 3.0 * rng.uniform() - 0.5;
    const double f = m == 0 ? -p.kp * x : p.Jp - p.kp * x;
    const double lambda = m == 0 ? p.ka : p.kd;
    CHECK(std::abs(chars.flow_at({m, {x}})[0] - f) <= 1e-12);
    CHECK(std::abs(chars.rate_at({m, {x}}) - lambda) <= 1e-12);
    const auto q = chars.kernel_at({m, {x}});
    REQUIRE(q.size() == 1);
    CHECK(q[0].target == HybridState{1 - m, {x}});
    if (x >= 0.0) {
      // mass action clamps negative concentrations, so compare on x >= 0
      CHECK(std::abs(compiled.flow_at({m, {x}})[0] - f) <= 1e-12);
      CHECK(std::abs(compiled.rate_at({m, {x}}) - lambda) <= 1e-12);
    }
  }
  CHECK(p.alpha_max() == doctest::Approx(1.5));
  CHECK(chars.rate_bound == doctest::Approx(1.3));
}

TEST_CASE("Cook parameters json") {
  const CookParams p = CookParams::from_json(nlohmann::json{{"ka", 2}, {"kd", 3}, {"Jp", 1}, {"kp", 4}});
  CHECK(p.alpha_max() == doctest::Approx(0.25));
  CHECK(CookParams::from_json(p.to_json()).to_json() == p.to_json());
  CHECK_THROWS_AS(CookParams::from_json(nlohmann::json{{"ka", -1}, {"kd", 3}, {"Jp", 1}, {"kp", 4}}),
                  SchemaError);
}

TEST_CASE("piecewise-linear functions") {
  const PiecewiseLinear f({0.0, 0.3, 1.0}, {0.0, 0.0, 0.7});
  CHECK(f(-1.0) == 0.0);
  CHECK(f(0.2) == 0.0);
  CHECK(f(0.65) == doctest::Approx(0.35));
  CHECK(f(2.0) == doctest::Approx(0.7));
  CHECK_THROWS_AS(PiecewiseLinear({0.0, 0.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseLinear({0.0}, {1.0, 2.0}), std::invalid_argument);
  const auto back = PiecewiseLinear::from_json(f.to_json());
  CHECK(back.knots == f.knots);
  CHECK(back.values == f.values);
}

TEST_CASE("On/Off parameters from json") {
  const nlohmann::json j{{"r0", {{"knots", {0, 1}}, {"values", {0, 1}}}},
                         {"r1", {{"knots", {0, 1}}, {"values", {1, 0}}}},
                         {"lambda0", 0.5},
                         {"lambda1", 2.0},
                         {"alpha_max", 1.0}};
  const OnOffParams p = OnOffParams::from_json(j);
  const auto chars = build_onoff(p);
  CHECK(chars.flow_at({0, {0.25}})[0] == doctest::Approx(-0.25));
  CHECK(chars.flow_at({1, {0.25}})[0] == doctest::Approx(0.75));
  CHECK(chars.rate_at({1, {0.25}}) == 2.0);
  CHECK(chars.rate_bound == 2.0);
  nlohmann::json bad = j;
  bad["lambda0"] = -1.0;
  CHECK_THROWS_AS(OnOffParams::from_json(bad), SchemaError);
}

TEST_CASE("phage invariant boxes") {
  const PhageParams p;
  CHECK(p.epsilon_max() == doctest::Approx(std::min(p.kd * p.kd / (4 * p.k1 * p.k_1), 1.0)));
  CHECK(p.epsilon_max() == doctest::Approx(0.9));
  const ModeBoxSet k = p.k_epsilon(0.5);
  CHECK(k.modes() == std::vector<std::size_t>{0});
  CHECK(k.hi()[0] == doctest::Approx(2 * p.k_1 * 0.5 / p.kd));
  CHECK(k.hi()[1] == 0.5);
  CHECK(phage_mode_names().size() == 4);
}

TEST_CASE("phage kernel weights are a probability mixture over active channels") {
  const PhageParams p;
  const auto chars = build_phage(p);
  CounterRng rng(3);
  for (int i = 0; i < 500; ++i) {
    const std::size_t m = rng() % 4;
    const HybridState s{m, {4.0 * rng.uniform(), 4.0 * rng.uniform()}};
    const double rate = chars.rate_at(s);
    if (rate == 0.0) continue;
    const auto q = chars.kernel_at(s);
    double total = 0.0;
    for (const auto& t : q) {
      CHECK(t.weight > 0.0);
      total += t.weight;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
    // bound-site modes always have an unbinding channel
    if (m != 0) CHECK(rate >= std::min({p.k_2, p.k_3, p.k_4}));
  }
}

TEST_CASE("phage parameters json keeps defaults for missing keys") {
  const PhageParams p = PhageParams::from_json(nlohmann::json{{"kd", 2.0}, {"n", 3}});
  CHECK(p.kd == 2.0);
  CHECK(p.n == 3);
  CHECK(p.k1 == PhageParams{}.k1);
  CHECK_THROWS_AS(PhageParams::from_json(nlohmann::json{{"n", 0}}), SchemaError);
  CHECK_THROWS_AS(PhageParams::from_json(nlohmann::json::array()), SchemaError);
}
