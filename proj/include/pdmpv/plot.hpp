#pragma once

// Self-contained SVG rendering of trajectories and grid functions.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pdmpv/hjb.hpp"
#include "pdmpv/pdmp.hpp"

namespace pdmpv {

/// Rule line at `value`; horizontal unless `vertical`.
struct PlotBound {
  double value = 0.0;
  std::string color = "green";
  bool vertical = false;
  std::string label;
};

struct PlotStyle {
  std::string title;
  std::string x_label = "t";
  std::string y_label = "x";
  std::vector<PlotBound> bounds;
  std::string path_color = "red";
  /// Open interval on the y axis. A segment whose two end samples both lie
  /// inside is drawn in `highlight_color`.
  std::optional<std::pair<double, double>> highlight;
  std::string highlight_color = "blue";
  /// Samples kept after decimation.
  std::size_t max_points = 4000;
};

/// Polyline of y against x. Throws std::invalid_argument on empty or
/// mismatched data.
std::string emit_plot(const std::vector<double>& xs, const std::vector<double>& ys,
                      const PlotStyle& style);

/// Component `axis` of the continuous state against time.
std::string plot_trajectory(const Trajectory& trajectory, std::size_t axis, PlotStyle style);

/// Phase plane: component `ax` horizontally, `ay` vertically.
std::string plot_phase(const Trajectory& trajectory, std::size_t ax, std::size_t ay,
                       PlotStyle style);

/// 1-D grid functions: one curve per mode.
std::string plot_grid(const GridFunction& g, PlotStyle style);

}  // namespace pdmpv
