#pragma once

// Grid solver for the discounted nonlocal Hamilton-Jacobi equations of the
// viability, invariance and reachability value functions, the generator
// applied to grid test functions, the dual quantity mu*, and the
// reachability decision built on them.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdmpv/geometry.hpp"
#include "pdmpv/pdmp.hpp"
#include "pdmpv/value.hpp"

namespace pdmpv {

/// Bounded mode-box domain with a tensor grid of `nodes[i]` points per axis.
struct GridSpec {
  ModeBoxSet domain;
  std::vector<std::size_t> nodes;

  GridSpec(ModeBoxSet domain, std::vector<std::size_t> nodes);
  /// Same node count on every axis.
  static GridSpec uniform(ModeBoxSet domain, std::size_t nodes_per_axis);

  std::size_t dim() const { return nodes.size(); }
  std::size_t nodes_per_mode() const;
  double spacing(std::size_t axis) const;
};

/// Interpolation stencil: up to 2^dim (flat index, weight) pairs.
struct Stencil {
  std::vector<std::size_t> index;
  std::vector<double> weight;
  /// The query point was clamped onto the domain.
  bool projected = false;
};

/// One value per (domain mode, grid node); flat index is
/// mode_slot * nodes_per_mode + row-major node index (last axis fastest).
class GridFunction {
 public:
  explicit GridFunction(GridSpec spec, double fill = 0.0);

  const GridSpec& spec() const { return spec_; }
  const ModeBoxSet& domain() const { return spec_.domain; }
  std::size_t size() const { return values_.size(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  /// Position of `mode` in the domain's mode list, nullopt if absent.
  std::optional<std::size_t> mode_slot(std::size_t mode) const;
  HybridState node_state(std::size_t flat) const;

  /// Multilinear stencil at (mode, x); x is clamped onto the box.
  /// Throws std::out_of_range if the mode is not in the domain.
  Stencil stencil(std::size_t mode, std::span<const double> x) const;
  double interpolate(const HybridState& s, bool* projected = nullptr) const;

  nlohmann::json to_json() const;
  static GridFunction from_json(const nlohmann::json& j);
  /// CSV with header `mode,x_1,...,x_n,value`.
  void write_csv(std::ostream& out) const;

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

/// U^u phi(s) = <grad phi(s), f(s,u)> + rate(s,u) * sum_r w_r (phi(z_r) - phi(s)).
/// Central differences with one grid spacing, one-sided at faces; kernel
/// targets are interpolated, and `projected` counts clamped targets.
double generator_apply(const PdmpCharacteristics& chars, const GridFunction& phi,
                       const HybridState& s, std::span<const double> control,
                       std::size_t* projected = nullptr);

enum class Optimize { Min, Max };

struct SolveOptions {
  double step = 0.01;
  double tolerance = 1e-8;
  /// Fill value of the initial iterate, or a full initial grid.
  double initial_fill = 0.0;
  std::optional<std::vector<double>> initial_values;
  std::vector<ControlValue> controls{ControlValue{}};
  std::optional<std::size_t> threads;
  /// Override of the iteration cap; the default is ceil(log(2/tol)/h) + 10.
  std::optional<std::size_t> max_iterations;
};

struct SolveReport {
  std::size_t iterations = 0;
  double final_residual = 0.0;
  /// Largest ratio of successive residuals while the residual is >= 1e-3.
  double contraction_estimate = 0.0;
  /// Geometric-mean ratio over the same window.
  double mean_contraction = 0.0;
  double time_step = 0.0;
  std::size_t iteration_bound = 0;
  double max_step_rate = 0.0;
  std::size_t projected_feet = 0;
  std::size_t projected_targets = 0;
  std::size_t evaluations = 0;
  bool low_confidence = false;
  /// Optimal control index per flat node.
  std::vector<std::size_t> feedback;
  std::vector<double> residuals;

  nlohmann::json to_json() const;
};

class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, SolveReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const SolveReport& report() const noexcept { return report_; }

 private:
  SolveReport report_;
};

using RunningCost = std::function<double(const HybridState&)>;

struct SolveResult {
  GridFunction value;
  SolveReport report;
};

/// Semi-Lagrangian value iteration
///   v <- opt_u [ (1 - e^-h) c + e^-h ((1 - h rate) v(Phi_h) + h rate sum_r w_r v(z_r)) ].
/// Stops once the contraction bound residual * e^-h / (1 - e^-h) drops
/// below the tolerance, so the result is within tol of the discrete fixed
/// point in the sup norm.
/// Throws std::invalid_argument for h * max rate >= 1 or kernel targets in
/// modes outside the domain, SolveError when the residual grows for 10
/// consecutive iterations or the iteration cap is reached.
SolveResult solve_discounted(const PdmpCharacteristics& chars, const RunningCost& cost,
                             Optimize optimize, const GridSpec& grid,
                             const SolveOptions& options = {});

/// Running cost -(d_{O^c} ^ 1) of the reach equation for target interior O.
RunningCost reach_cost(const ModeBoxSet& target);

/// Separable binomial [1 2 1]/4 filter applied `passes` times per mode,
/// mirrored at the faces.
GridFunction smooth(const GridFunction& g, std::size_t passes = 2);

/// min over nodes y and controls u of U^u phi(y) - d_{O^c}(y)^1 + phi(x) - phi(y).
double mu_candidate(const PdmpCharacteristics& chars, const ModeBoxSet& target,
                    const HybridState& x, const GridFunction& phi,
                    const std::vector<ControlValue>& controls = {ControlValue{}});

/// Sum of at most 5 Gaussian bumps over the continuous coordinates with
/// per-mode amplitudes in [-1, 1] and widths 0.1 to 0.5 of the box extent.
GridFunction random_test_function(const GridSpec& grid, CounterRng& rng);

struct ReachOptions {
  SolveOptions solve;
  double margin = 1e-3;
  std::size_t audit_functions = 20;
  std::uint64_t audit_seed = 1;
  double audit_slack = 0.02;
  std::size_t smoothing_passes = 2;
  /// Monte Carlo corroboration when set.
  std::optional<MonteCarloConfig> monte_carlo;
  ControlPolicy policy = ControlPolicy::uncontrolled();
};

struct DualityAudit {
  /// mu_candidate of every random test function.
  std::vector<double> random_mu;
  double max_random_mu = 0.0;
  double smoothed_mu = 0.0;
  double slack = 0.0;
  bool weak_duality_holds = false;
  bool smoothed_agrees = false;
};

struct ReachDecision {
  bool reachable = false;
  double value = 0.0;
  double margin = 0.0;
  SolveReport solve;
  DualityAudit audit;
  std::optional<HittingEstimate> hitting;

  std::string verdict() const;
  nlohmann::json to_json() const;
};

ReachDecision decide_reachability(const PdmpCharacteristics& chars, const ModeBoxSet& target,
                                  const HybridState& x, const GridSpec& grid,
                                  const ReachOptions& options = {});

}  // namespace pdmpv
