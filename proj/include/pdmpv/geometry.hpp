#pragma once

// Constraint and target sets of the form (mode subset) x (axis-aligned box),
// their capped distance functions and normal cones, and the grid verifiers
// for the invariance and viability conditions.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "pdmpv/pdmp.hpp"

namespace pdmpv {

/// K = modes x [lo, hi]. Bounds may be infinite. Points in other modes are
/// at capped distance 1 from K.
class ModeBoxSet {
 public:
  ModeBoxSet(std::vector<std::size_t> modes, Vector lo, Vector hi);

  /// Every mode in [0, mode_count) and the whole space.
  static ModeBoxSet everything(std::size_t mode_count, std::size_t dim);

  const std::vector<std::size_t>& modes() const { return modes_; }
  const Vector& lo() const { return lo_; }
  const Vector& hi() const { return hi_; }
  std::size_t dim() const { return lo_.size(); }

  bool has_mode(std::size_t mode) const;
  /// Closed-set membership.
  bool contains(const HybridState& s) const;
  /// Membership in the open interior (the reading used for target sets).
  bool interior_contains(const HybridState& s) const;
  bool bounded() const;

  /// min(1, Euclidean distance to the box); 1 for excluded modes.
  double capped_distance(const HybridState& s) const;
  double capped_distance(std::size_t mode, std::span<const double> x) const;
  /// min(1, distance from s to the complement of the open interior). Zero
  /// for excluded modes and outside the box; 1 when the interior is the
  /// whole space.
  double capped_distance_to_complement(std::size_t mode, std::span<const double> x) const;

  nlohmann::json to_json() const;
  static ModeBoxSet from_json(const nlohmann::json& j, const std::string& path = "");

 private:
  std::vector<std::size_t> modes_;
  Vector lo_, hi_;
};

/// Finite list of unit generators; the cone is their conic hull (always
/// containing 0). Empty at interior points.
struct NormalCone {
  std::vector<Vector> generators;
};

/// Face-membership tolerance for normal cones.
inline constexpr double kFaceTolerance = 1e-9;

/// Normal cone of a box at a point of the set: -e_i on x_i = lo_i, +e_i on
/// x_i = hi_i. Throws std::invalid_argument if s is not in the set.
NormalCone normal_cone(const ModeBoxSet& set, const HybridState& s);

/// rate(s, u) * Q(s, u, K^c), exact for finite kernels.
double jump_escape_mass(const PdmpCharacteristics& chars, const ModeBoxSet& set,
                        const HybridState& s, std::span<const double> control);

struct CheckResolution {
  /// Lattice points per axis on every face and in the interior. Corners and
  /// edges are lattice points.
  std::size_t density = 33;
  std::vector<ControlValue> controls{ControlValue{}};
  double tolerance = 1e-9;
  /// Unit directions sampled per two-generator cone (viability only).
  std::size_t cone_directions = 9;
};

struct CheckViolation {
  Vector point;
  std::size_t mode = 0;
  ControlValue control;
  /// Empty for interior (jump-only) conditions.
  Vector direction;
  double value = 0.0;
};

struct CheckReport {
  bool pass = true;
  /// Tuple with the largest condition value (ties broken lexicographically
  /// on point, control, direction).
  std::optional<CheckViolation> worst;
  std::size_t faces = 0;
  std::size_t density = 0;
  std::size_t boundary_points = 0;
  std::size_t interior_points = 0;
  double tolerance = 0.0;
  std::string note;

  nlohmann::json to_json() const;
};

/// Keeps the worse of two violations; associative and order independent.
void merge_worst(std::optional<CheckViolation>& acc, const CheckViolation& candidate);

/// Invariance: for every boundary lattice point, control and cone generator
/// <f, p> <= tol with zero escape mass; zero escape mass on the interior
/// lattice. Scaling p -> t p separates the two terms, so checking the
/// generators is exact for box cones. Throws if the set is unbounded.
CheckReport check_invariance(const PdmpCharacteristics& chars, const ModeBoxSet& set,
                             const CheckResolution& resolution = {});

/// Viability: for every boundary lattice point and every sampled cone
/// direction, min over the control grid of <f, p> + escape mass <= tol;
/// interior: min over controls of escape mass <= tol. Resolution limited:
/// conic sampling density is the soundness knob.
CheckReport check_viability(const PdmpCharacteristics& chars, const ModeBoxSet& set,
                            const CheckResolution& resolution = {});

/// Unit directions covering the cone: the generators plus conic combinations.
std::vector<Vector> cone_directions(const NormalCone& cone, std::size_t per_pair);

}  // namespace pdmpv
