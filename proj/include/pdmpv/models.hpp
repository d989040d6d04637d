#pragma once

// Built-in models: the two-mode On/Off gene switch (and Cook's instance of
// it) and the bacteriophage lambda operator-site model.

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdmpv/geometry.hpp"
#include "pdmpv/pdmp.hpp"
#include "pdmpv/reaction_network.hpp"

namespace pdmpv {

/// Piecewise-linear function through (knots[i], values[i]), constant
/// beyond the end knots.
struct PiecewiseLinear {
  Vector knots;
  Vector values;

  PiecewiseLinear(Vector knots, Vector values);
  double operator()(double x) const;

  nlohmann::json to_json() const;
  static PiecewiseLinear from_json(const nlohmann::json& j, const std::string& path = "");
};

/// Mode 0 consumes at r0, mode 1 produces at r1; the mode flips at rate
/// lambda0 (from 0) or lambda1 (from 1) and the protein level is kept.
struct OnOffParams {
  std::function<double(double)> r0;
  std::function<double(double)> r1;
  double lambda0 = 1.0;
  double lambda1 = 1.0;
  double alpha_max = 1.0;
  /// JSON description of r0/r1 when built from piecewise-linear data.
  nlohmann::json description;

  static OnOffParams from_json(const nlohmann::json& j, const std::string& path = "");
};

struct CookParams {
  double ka = 1.0;
  double kd = 1.5;
  double Jp = 0.8;
  double kp = 0.8;

  double alpha_max() const { return Jp / kp; }
  OnOffParams onoff() const;
  /// K = [0, alpha_max] x {0, 1}.
  ModeBoxSet invariant_set() const;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults.
  static CookParams from_json(const nlohmann::json& j, const std::string& path = "");
};

struct PhageParams {
  double k1 = 0.5, k_1 = 0.8;
  double k2 = 1.0, k_2 = 0.5;
  double k3 = 0.8, k_3 = 0.6;
  double k4 = 1.2, k_4 = 0.4;
  double kt = 2.0;
  double kd = 1.2;
  unsigned n = 5;
  double err = 0.1;
  double cap = 1e6;

  /// min(kd^2 / (4 k1 k_1), 1)
  double epsilon_max() const;
  /// {e1} x [0, 2 k_1 eps / kd] x [0, eps]
  ModeBoxSet k_epsilon(double eps) const;

  nlohmann::json to_json() const;
  static PhageParams from_json(const nlohmann::json& j, const std::string& path = "");
};

/// Two modes, one continuous axis.
PdmpCharacteristics build_onoff(const OnOffParams& p);
PdmpCharacteristics build_cook(const CookParams& p);

/// Cook's switch as a reaction network: Goff/Gon discrete, P continuous.
ReactionNetwork cook_network(const CookParams& p);

/// Species X, X2 (continuous) and D, DX2, DX2*, DX2X2 (discrete), started
/// from free DNA, so modes 0..3 are e1..e4.
ReactionNetwork phage_network(const PhageParams& p);
PdmpCharacteristics build_phage(const PhageParams& p);

/// Names e1..e4 of the phage modes.
const std::vector<std::string>& phage_mode_names();

}  // namespace pdmpv
