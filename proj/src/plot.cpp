#include "pdmpv/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace pdmpv {

namespace {

constexpr double kWidth = 800.0, kHeight = 600.0;
constexpr double kLeft = 70.0, kRight = 30.0, kTop = 40.0, kBottom = 60.0;

struct Series {
  std::vector<double> xs, ys;
  std::string color;
  std::string label;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (lo > hi) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double m = 0.05 * (hi - lo);
    lo -= m;
    hi += m;
  }
};

std::vector<std::size_t> keep_indices(std::size_t n, std::size_t max_points) {
  std::vector<std::size_t> idx;
  const std::size_t stride = max_points < 2 || n <= max_points ? 1 : (n + max_points - 2) / (max_points - 1);
  for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

std::string render(const std::vector<Series>& series, const PlotStyle& style) {
  Range rx, ry;
  for (const Series& s : series) {
    for (double v : s.xs) rx.add(v);
    for (double v : s.ys) ry.add(v);
  }
  for (const PlotBound& b : style.bounds) (b.vertical ? rx : ry).add(b.value);
  if (style.highlight) {
    ry.add(style.highlight->first);
    ry.add(style.highlight->second);
  }
  rx.pad();
  ry.pad();
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto py = [&](double y) { return kTop + (ry.hi - y) / (ry.hi - ry.lo) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
         "viewBox=\"0 0 800 600\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
  if (!style.title.empty()) {
    svg << "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">"
        << escape(style.title) << "</text>\n";
  }
  svg << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = rx.lo + (rx.hi - rx.lo) * k / 5.0;
    const double yv = ry.lo + (ry.hi - ry.lo) * k / 5.0;
    svg << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kTop + ph + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << tick(xv)
        << "</text>\n";
    svg << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(yv) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << tick(yv)
        << "</text>\n";
  }
  svg << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 15)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << escape(style.x_label) << "</text>\n";
  svg << "<text x=\"18\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\" transform=\"rotate(-90 18 "
      << num(kTop + ph / 2) << ")\">" << escape(style.y_label) << "</text>\n";

  auto rule = [&](double value, bool vertical, const std::string& color, const std::string& label) {
    if (vertical) {
      svg << "<line class=\"bound\" x1=\"" << num(px(value)) << "\" y1=\"" << num(kTop) << "\" x2=\""
          << num(px(value)) << "\" y2=\"" << num(kTop + ph) << "\"";
    } else {
      svg << "<line class=\"bound\" x1=\"" << num(kLeft) << "\" y1=\"" << num(py(value))
          << "\" x2=\"" << num(kLeft + pw) << "\" y2=\"" << num(py(value)) << "\"";
    }
    svg << " stroke=\"" << escape(color) << "\" stroke-width=\"2\"";
    if (!label.empty()) svg << "><title>" << escape(label) << "</title></line>\n";
    else svg << "/>\n";
  };
  for (const PlotBound& b : style.bounds) rule(b.value, b.vertical, b.color, b.label);
  if (style.highlight) {
    rule(style.highlight->first, false, style.highlight_color, "target lower bound");
    rule(style.highlight->second, false, style.highlight_color, "target upper bound");
  }

  for (const Series& s : series) {
    const auto idx = keep_indices(s.xs.size(), style.max_points);
    auto inside = [&](std::size_t i) {
      return style.highlight && s.ys[i] > style.highlight->first && s.ys[i] < style.highlight->second;
    };
    // runs of equal color; each run starts at the previous run's last sample
    std::size_t k = 0;
    while (k + 1 < idx.size()) {
      const bool hot = inside(idx[k]) && inside(idx[k + 1]);
      std::size_t end = k + 1;
      while (end + 1 < idx.size() && (inside(idx[end]) && inside(idx[end + 1])) == hot) ++end;
      const std::string& color = hot ? style.highlight_color : s.color;
      svg << "<polyline class=\"path\" fill=\"none\" stroke=\"" << escape(color)
          << "\" stroke-width=\"2\" points=\"";
      for (std::size_t j = k; j <= end; ++j) {
        if (j > k) svg << ' ';
        svg << num(px(s.xs[idx[j]])) << ',' << num(py(s.ys[idx[j]]));
      }
      svg << "\"/>\n";
      k = end;
    }
    if (idx.size() == 1) {
      svg << "<circle class=\"path\" cx=\"" << num(px(s.xs[0])) << "\" cy=\"" << num(py(s.ys[0]))
          << "\" r=\"2\" fill=\"" << escape(s.color) << "\"/>\n";
    }
  }
  if (series.size() > 1) {
    double y = kTop + 16;
    for (const Series& s : series) {
      svg << "<text x=\"" << num(kLeft + pw - 8) << "\" y=\"" << num(y)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
          << escape(s.color) << "\">" << escape(s.label) << "</text>\n";
      y += 16;
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

void check_series(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.empty()) throw std::invalid_argument("nothing to plot: the data is empty");
  if (xs.size() != ys.size()) throw std::invalid_argument("plot coordinates differ in length");
}

}  // namespace

std::string emit_plot(const std::vector<double>& xs, const std::vector<double>& ys,
                      const PlotStyle& style) {
  check_series(xs, ys);
  return render({{xs, ys, style.path_color, ""}}, style);
}

std::string plot_trajectory(const Trajectory& trajectory, std::size_t axis, PlotStyle style) {
  std::vector<double> ts, ys;
  for (const auto& seg : trajectory.segments) {
    for (const auto& p : seg.points) {
      if (axis >= p.x.size()) throw std::invalid_argument("plot axis exceeds the state dimension");
      ts.push_back(p.t);
      ys.push_back(p.x[axis]);
    }
  }
  return emit_plot(ts, ys, style);
}

std::string plot_phase(const Trajectory& trajectory, std::size_t ax, std::size_t ay,
                       PlotStyle style) {
  std::vector<double> xs, ys;
  for (const auto& seg : trajectory.segments) {
    for (const auto& p : seg.points) {
      if (ax >= p.x.size() || ay >= p.x.size()) {
        throw std::invalid_argument("plot axis exceeds the state dimension");
      }
      xs.push_back(p.x[ax]);
      ys.push_back(p.x[ay]);
    }
  }
  style.highlight.reset();
  return emit_plot(xs, ys, style);
}

std::string plot_grid(const GridFunction& g, PlotStyle style) {
  if (g.spec().dim() != 1) throw std::invalid_argument("grid plots support one continuous axis");
  if (g.size() == 0) throw std::invalid_argument("nothing to plot: the grid is empty");
  static const char* palette[] = {"black", "red", "blue", "green", "orange", "purple"};
  std::vector<Series> series;
  const std::size_t npm = g.spec().nodes_per_mode();
  for (std::size_t slot = 0; slot < g.domain().modes().size(); ++slot) {
    Series s;
    s.color = palette[slot % 6];
    s.label = "mode " + std::to_string(g.domain().modes()[slot]);
    for (std::size_t k = 0; k < npm; ++k) {
      const HybridState node = g.node_state(slot * npm + k);
      s.xs.push_back(node.x[0]);
      s.ys.push_back(g.values()[slot * npm + k]);
    }
    series.push_back(std::move(s));
  }
  style.highlight.reset();
  return render(series, style);
}

}  // namespace pdmpv
