#include <string>

#include "doctest.h"
#include "pdmpv/hjb.hpp"
#include "pdmpv/models.hpp"
#include "pdmpv/plot.hpp"

using namespace pdmpv;

namespace {

std::size_t count(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (auto pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("basic svg document") {
  PlotStyle style;
  style.title = "a < b";
  style.bounds = {{0.0, "green"}, {1.0, "green"}};
  const std::string svg = emit_plot({0.0, 1.0, 2.0}, {0.0, 0.5, 1.0}, style);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("a &lt; b") != std::string::npos);
  CHECK(count(svg, "class=\"bound\"") == 2);
  CHECK(svg.find("stroke=\"red\"") != std::string::npos);
  CHECK_THROWS_AS(emit_plot({}, {}, style), std::invalid_argument);
  CHECK_THROWS_AS(emit_plot({0.0}, {0.0, 1.0}, style), std::invalid_argument);
}

TEST_CASE("highlight recolors segments inside the open band") {
  PlotStyle style;
  style.highlight = std::make_pair(0.4, 0.6);
  const std::string svg = emit_plot({0, 1, 2, 3, 4}, {0.1, 0.5, 0.55, 0.9, 0.2}, style);
  CHECK(svg.find("stroke=\"blue\"") != std::string::npos);
  CHECK(svg.find("stroke=\"red\"") != std::string::npos);
  const std::string plain = emit_plot({0, 1}, {0.1, 0.2}, style);
  CHECK(count(plain, "class=\"path\" fill=\"none\" stroke=\"blue\"") == 0);
}

TEST_CASE("trajectory, phase and grid plots") {
  const Trajectory tr = simulate(build_cook({}), {0, {0.5}}, ControlPolicy::uncontrolled(), 5.0, 3);
  const std::string t = plot_trajectory(tr, 0, {});
  CHECK(t.find("<polyline") != std::string::npos);
  CHECK_THROWS(plot_trajectory(tr, 1, {}));
  const Trajectory ph = simulate(build_phage({}), {0, {0.3, 0.2}}, ControlPolicy::uncontrolled(), 2.0, 1);
  CHECK(plot_phase(ph, 0, 1, {}).find("<polyline") != std::string::npos);
  GridFunction g(GridSpec::uniform(ModeBoxSet({0, 1}, {0.0}, {1.0}), 9), 0.5);
  CHECK(count(plot_grid(g, {}), "class=\"path\"") >= 2);
}

TEST_CASE("decimation caps the number of points") {
  std::vector<double> xs(100000), ys(100000);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = static_cast<double>(i);
    ys[i] = static_cast<double>(i % 7);
  }
  PlotStyle style;
  style.max_points = 500;
  const std::string svg = emit_plot(xs, ys, style);
  CHECK(svg.size() < 100000);
}
