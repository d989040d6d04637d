#pragma once

// Reaction networks with a continuous/discrete species partition, and their
// compilation into PDMP characteristics: flow reactions drive the ODE, jump
// reactions drive the kernel, propensities are smoothed near depletion and
// capped.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdmpv/pdmp.hpp"

namespace pdmpv {

enum class SpeciesKind { Continuous, Discrete };
enum class ReactionClass { Flow, Jump };

struct Species {
  std::string name;
  SpeciesKind kind = SpeciesKind::Continuous;
};

struct Reaction {
  std::vector<unsigned> alpha;  ///< reactant counts
  std::vector<unsigned> beta;   ///< product counts
  double rate = 0.0;
  ReactionClass klass = ReactionClass::Flow;
  std::string label;

  /// beta - alpha
  std::vector<int> stoichiometry() const;
};

/// Depletion cutoff chi and the propensity cap.
///
/// chi(y) = 0 for y <= 1, 1 for y >= 1 + err, cubic smoothstep in between
/// (C^1, values in [0, 1]).
struct SmoothingProfile {
  double err = 0.1;
  double cap = 1e6;

  double chi(double y) const noexcept;
};

class NetworkError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ReactionNetwork {
 public:
  /// `initial_discrete` holds one count per discrete species (in species
  /// order); it seeds the mode enumeration. Defaults to all zeros.
  ReactionNetwork(std::vector<Species> species, std::vector<Reaction> reactions,
                  SmoothingProfile smoothing = {},
                  std::vector<unsigned> initial_discrete = {});

  const std::vector<Species>& species() const { return species_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  const SmoothingProfile& smoothing() const { return smoothing_; }
  const std::vector<unsigned>& initial_discrete() const { return initial_discrete_; }

  std::size_t species_count() const { return species_.size(); }
  /// Species indices of the continuous (resp. discrete) class, in order.
  const std::vector<std::size_t>& continuous_species() const { return continuous_; }
  const std::vector<std::size_t>& discrete_species() const { return discrete_; }

  static ReactionNetwork from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

 private:
  std::vector<Species> species_;
  std::vector<Reaction> reactions_;
  SmoothingProfile smoothing_;
  std::vector<unsigned> initial_discrete_;
  std::vector<std::size_t> continuous_;
  std::vector<std::size_t> discrete_;
};

/// Propensity of reaction r at the full species vector x (network order).
///
/// Flow reactions: k * prod x_i^alpha_i. Jump reactions additionally carry
/// chi(x_i / alpha_i) for every continuous reactant; discrete reactants
/// enter through the falling factorial of their count. Negative components
/// are clamped to 0. The result is capped at the smoothing cap.
double propensity(const ReactionNetwork& net, std::size_t r, std::span<const double> x);

/// Discrete configurations reachable from the initial one through jump
/// reactions, in breadth-first order. Index = mode.
std::vector<std::vector<unsigned>> enumerate_modes(const ReactionNetwork& net,
                                                   std::size_t max_modes = 4096);

/// sup over jump reactions of |theta^r| (all species coordinates).
double max_jump_radius(const ReactionNetwork& net);

/// f = sum over flow reactions of theta^r lambda_r, lambda = sum over jump
/// reactions of lambda_r, Q = mixture of deltas at x + theta^r with weights
/// lambda_r / lambda. Modes follow enumerate_modes; the continuous vector
/// holds the continuous species in network order. Controls are ignored.
PdmpCharacteristics compile(const ReactionNetwork& net);

/// Full species vector for a hybrid state of the compiled network.
Vector species_vector(const ReactionNetwork& net,
                      const std::vector<std::vector<unsigned>>& modes,
                      const HybridState& state);

struct ProbeSpec {
  /// Bounding box of the continuous coordinates at scale 1.
  Vector lo, hi;
  /// Random pairs per mode and scale.
  std::size_t pairs = 10000;
  /// Nested regions: the box is scaled about its centre by each factor.
  std::vector<double> scales{1.0, 2.0, 4.0};
  std::vector<ControlValue> controls{ControlValue{}};
  std::uint64_t seed = 1;
};

struct RegionEstimate {
  double scale = 1.0;
  double sup_flow = 0.0;
  double lipschitz_flow = 0.0;
  double sup_rate = 0.0;
  double lipschitz_rate = 0.0;
};

/// Numerical evidence for the standing assumptions. Sampled constants are
/// evidence, not proof.
struct AssumptionReport {
  std::vector<RegionEstimate> regions;
  bool a1_bounded = true;  ///< flow estimates do not grow across nested regions
  bool a2_bounded = true;  ///< rate estimates do not grow and stay under the bound
  bool a4_finite_mixture = true;  ///< kernels are finite probability mixtures
  bool a3_structural = true;      ///< capped rate + finite support kernel
  double a5_radius = 0.0;
  bool a5_exact = false;  ///< radius from the declared displacement bound
  bool a5_ok = true;      ///< no sampled jump exceeds the radius
  std::vector<std::string> flags;

  bool passes() const {
    return a1_bounded && a2_bounded && a3_structural && a4_finite_mixture && a5_ok;
  }
  nlohmann::json to_json() const;
};

AssumptionReport validate_assumptions(const PdmpCharacteristics& chars,
                                      const ProbeSpec& probe);

}  // namespace pdmpv
