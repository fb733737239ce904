#pragma once

// Static SVG emission: loss curves (log-scale loss vs steps) and overlaid
// 2-D parameter trajectories with optional objective contour backgrounds.
// Output is a single self-contained vector file; the data-* attributes on
// the root element expose the mapped data range for downstream tooling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "hizoo/core.hpp"
#include "hizoo/format.hpp"
#include "hizoo/harness.hpp"
#include "hizoo/objectives.hpp"

namespace hizoo {

enum class PlotMode { loss_curve, trajectory_2d };

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[48];
  auto res = std::to_chars(buf, buf + sizeof(buf), v,
                           std::chars_format::general, 8);
  return std::string(buf, res.ptr);
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
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

struct PlotFrame {
  double px = 70, py = 40, pw = 700, ph = 460;  // plot area in pixels
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool log_y = false;

  double tx(double x) const {
    const double range = x_max - x_min;
    return px + (x - x_min) / (range == 0.0 ? 1.0 : range) * pw;
  }
  double ty(double y) const {
    double v = y, lo = y_min, hi = y_max;
    if (log_y) {
      v = std::log10(y);
      lo = std::log10(y_min);
      hi = std::log10(y_max);
    }
    const double range = hi - lo;
    return py + ph - (v - lo) / (range == 0.0 ? 1.0 : range) * ph;
  }
};

inline const char* series_color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b",
                                  "#17becf", "#7f7f7f"};
  return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

// Axis ticks: plain fractions for linear axes, integer decades for log.
inline void emit_axes(std::string& svg, const PlotFrame& f,
                      const std::string& x_label,
                      const std::string& y_label) {
  svg += "<g class=\"axes\" font-family=\"sans-serif\" font-size=\"12\" "
         "fill=\"#333333\">\n";
  const int n_ticks = 5;
  for (int i = 0; i <= n_ticks; ++i) {
    const double frac = static_cast<double>(i) / n_ticks;
    const double x = f.x_min + frac * (f.x_max - f.x_min);
    const double px = f.tx(x);
    svg += "<line x1=\"" + svg_num(px) + "\" y1=\"" + svg_num(f.py + f.ph) +
           "\" x2=\"" + svg_num(px) + "\" y2=\"" +
           svg_num(f.py + f.ph + 5) + "\" stroke=\"#333333\"/>\n";
    svg += "<text x=\"" + svg_num(px) + "\" y=\"" +
           svg_num(f.py + f.ph + 18) + "\" text-anchor=\"middle\">" +
           svg_num(x) + "</text>\n";
  }
  if (f.log_y) {
    const int lo = static_cast<int>(std::floor(std::log10(f.y_min)));
    const int hi = static_cast<int>(std::ceil(std::log10(f.y_max)));
    for (int e = lo; e <= hi; ++e) {
      const double y = std::pow(10.0, e);
      if (y < f.y_min || y > f.y_max) continue;
      const double py = f.ty(y);
      svg += "<line x1=\"" + svg_num(f.px - 5) + "\" y1=\"" + svg_num(py) +
             "\" x2=\"" + svg_num(f.px) + "\" y2=\"" + svg_num(py) +
             "\" stroke=\"#333333\"/>\n";
      svg += "<text x=\"" + svg_num(f.px - 8) + "\" y=\"" +
             svg_num(py + 4) + "\" text-anchor=\"end\">1e" +
             std::to_string(e) + "</text>\n";
    }
  } else {
    for (int i = 0; i <= n_ticks; ++i) {
      const double frac = static_cast<double>(i) / n_ticks;
      const double y = f.y_min + frac * (f.y_max - f.y_min);
      const double py = f.ty(y);
      svg += "<line x1=\"" + svg_num(f.px - 5) + "\" y1=\"" + svg_num(py) +
             "\" x2=\"" + svg_num(f.px) + "\" y2=\"" + svg_num(py) +
             "\" stroke=\"#333333\"/>\n";
      svg += "<text x=\"" + svg_num(f.px - 8) + "\" y=\"" +
             svg_num(py + 4) + "\" text-anchor=\"end\">" + svg_num(y) +
             "</text>\n";
    }
  }
  svg += "<text x=\"" + svg_num(f.px + f.pw / 2) + "\" y=\"" +
         svg_num(f.py + f.ph + 38) + "\" text-anchor=\"middle\">" +
         xml_escape(x_label) + "</text>\n";
  svg += "<text x=\"16\" y=\"" + svg_num(f.py + f.ph / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         svg_num(f.py + f.ph / 2) + ")\">" + xml_escape(y_label) +
         "</text>\n";
  svg += "</g>\n";
}

// Marching-squares contour segments for one iso-level on a sampled grid.
inline void emit_contour_level(std::string& svg, const PlotFrame& f,
                               const std::vector<double>& grid,
                               std::size_t nx, std::size_t ny, double level) {
  auto value = [&](std::size_t i, std::size_t j) { return grid[j * nx + i]; };
  auto gx = [&](std::size_t i) {
    return f.x_min + (f.x_max - f.x_min) * static_cast<double>(i) /
                         static_cast<double>(nx - 1);
  };
  auto gy = [&](std::size_t j) {
    return f.y_min + (f.y_max - f.y_min) * static_cast<double>(j) /
                         static_cast<double>(ny - 1);
  };
  std::string d;
  for (std::size_t j = 0; j + 1 < ny; ++j) {
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      const double v[4] = {value(i, j), value(i + 1, j), value(i + 1, j + 1),
                           value(i, j + 1)};
      const double xs[4] = {gx(i), gx(i + 1), gx(i + 1), gx(i)};
      const double ys[4] = {gy(j), gy(j), gy(j + 1), gy(j + 1)};
      std::vector<std::pair<double, double>> hits;
      for (int e = 0; e < 4; ++e) {
        const int a = e, b = (e + 1) % 4;
        const double va = v[a] - level, vb = v[b] - level;
        if ((va < 0.0 && vb >= 0.0) || (vb < 0.0 && va >= 0.0)) {
          const double t = va / (va - vb);
          hits.emplace_back(xs[a] + t * (xs[b] - xs[a]),
                            ys[a] + t * (ys[b] - ys[a]));
        }
      }
      for (std::size_t k = 0; k + 1 < hits.size(); k += 2) {
        d += "M" + svg_num(f.tx(hits[k].first)) + " " +
             svg_num(f.ty(hits[k].second)) + "L" +
             svg_num(f.tx(hits[k + 1].first)) + " " +
             svg_num(f.ty(hits[k + 1].second));
      }
    }
  }
  if (!d.empty()) {
    svg += "<path class=\"contour\" d=\"" + d +
           "\" fill=\"none\" stroke=\"#d8d8d8\" stroke-width=\"1\"/>\n";
  }
}

inline void emit_contours(std::string& svg, const PlotFrame& f,
                          const Objective& obj) {
  const std::size_t nx = 61, ny = 61;
  std::vector<double> grid(nx * ny);
  ParamVector p(2);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      p[0] = f.x_min + (f.x_max - f.x_min) * static_cast<double>(i) /
                           static_cast<double>(nx - 1);
      p[1] = f.y_min + (f.y_max - f.y_min) * static_cast<double>(j) /
                           static_cast<double>(ny - 1);
      const double v = obj(p);
      grid[j * nx + i] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > lo)) return;
  svg += "<g class=\"contours\">\n";
  const int n_levels = 9;
  for (int k = 1; k <= n_levels; ++k) {
    double level;
    if (lo > 0.0 && hi / lo > 100.0) {
      level = lo * std::pow(hi / lo, static_cast<double>(k) / (n_levels + 1));
    } else {
      level = lo + (hi - lo) * static_cast<double>(k) / (n_levels + 1);
    }
    emit_contour_level(svg, f, grid, nx, ny, level);
  }
  svg += "</g>\n";
}

}  // namespace detail

/// Render series to an SVG string. For trajectory_2d with a bundled 2-D
/// objective, iso-loss contours are drawn behind the paths; the contour grid
/// spans the data bounding box plus a 10% margin per side (the same padded
/// range exposed in the data-* root attributes).
inline std::string render_plot_svg(PlotMode mode,
                                   const std::vector<PlotSeries>& series,
                                   const Objective* contour_objective =
                                       nullptr) {
  detail::PlotFrame f;
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo, y_lo = x_lo, y_hi = -x_lo;
  bool any = false;
  bool all_y_positive = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      any = true;
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
      if (!(y > 0.0)) all_y_positive = false;
    }
  }
  if (!any) {
    x_lo = 0.0;
    x_hi = 1.0;
    y_lo = 0.0;
    y_hi = 1.0;
    all_y_positive = false;
  }
  // Trajectory plots pad the data box by 10% per side (the contour grid
  // spans the same padded range); the step axis of a loss curve is exact.
  const double x_margin =
      mode == PlotMode::trajectory_2d ? 0.1 * (x_hi - x_lo) : 0.0;
  const double y_margin = 0.1 * (y_hi - y_lo);
  if (mode == PlotMode::trajectory_2d) {
    f.x_min = x_lo - (x_margin > 0.0 ? x_margin : 0.5);
    f.x_max = x_hi + (x_margin > 0.0 ? x_margin : 0.5);
  } else {
    f.x_min = x_lo;
    f.x_max = x_hi > x_lo ? x_hi : x_lo + 1.0;
  }
  f.log_y = mode == PlotMode::loss_curve && all_y_positive;
  if (f.log_y) {
    // Pad multiplicatively so the log axis keeps the 10% visual margin.
    const double ratio = std::pow(y_hi / y_lo, 0.1);
    f.y_min = y_lo / (ratio > 1.0 ? ratio : 2.0);
    f.y_max = y_hi * (ratio > 1.0 ? ratio : 2.0);
  } else {
    f.y_min = y_lo - (y_margin > 0.0 ? y_margin : 0.5);
    f.y_max = y_hi + (y_margin > 0.0 ? y_margin : 0.5);
  }

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" "
         "height=\"600\" viewBox=\"0 0 800 600\"";
  svg += std::string(" data-mode=\"") +
         (mode == PlotMode::loss_curve ? "loss_curve" : "trajectory_2d") +
         "\"";
  svg += " data-x-min=\"" + format_double(f.x_min) + "\"";
  svg += " data-x-max=\"" + format_double(f.x_max) + "\"";
  svg += " data-y-min=\"" + format_double(f.y_min) + "\"";
  svg += " data-y-max=\"" + format_double(f.y_max) + "\"";
  svg += " data-series=\"" + std::to_string(series.size()) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" "
         "fill=\"#ffffff\"/>\n";
  svg += "<rect class=\"plot-area\" x=\"" + detail::svg_num(f.px) +
         "\" y=\"" + detail::svg_num(f.py) + "\" width=\"" +
         detail::svg_num(f.pw) + "\" height=\"" + detail::svg_num(f.ph) +
         "\" fill=\"#fafafa\" stroke=\"#333333\"/>\n";

  if (mode == PlotMode::trajectory_2d && contour_objective != nullptr &&
      contour_objective->dim == 2) {
    detail::emit_contours(svg, f, *contour_objective);
  }

  detail::emit_axes(svg, f,
                    mode == PlotMode::loss_curve ? "step" : "param_0",
                    mode == PlotMode::loss_curve ? "loss" : "param_1");

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = detail::series_color(s);
    std::string pts;
    for (const auto& [x, y] : series[s].points) {
      if (f.log_y && !(y > 0.0)) continue;
      pts += detail::svg_num(f.tx(x)) + "," + detail::svg_num(f.ty(y)) + " ";
    }
    svg += std::string("<polyline class=\"series-line\" fill=\"none\" "
                       "stroke=\"") +
           color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    if (mode == PlotMode::trajectory_2d && !series[s].points.empty()) {
      const auto& first = series[s].points.front();
      const auto& last = series[s].points.back();
      svg += std::string("<circle class=\"start-marker\" cx=\"") +
             detail::svg_num(f.tx(first.first)) + "\" cy=\"" +
             detail::svg_num(f.ty(first.second)) + "\" r=\"4\" fill=\"" +
             color + "\"/>\n";
      svg += std::string("<rect class=\"end-marker\" x=\"") +
             detail::svg_num(f.tx(last.first) - 3.5) + "\" y=\"" +
             detail::svg_num(f.ty(last.second) - 3.5) +
             "\" width=\"7\" height=\"7\" fill=\"" + color + "\"/>\n";
    }
  }

  svg += "<g class=\"legend\" font-family=\"monospace\" font-size=\"11\">\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double ly = 55.0 + 16.0 * static_cast<double>(s);
    svg += std::string("<line x1=\"580\" x2=\"604\" y1=\"") +
           detail::svg_num(ly - 4) + "\" y2=\"" + detail::svg_num(ly - 4) +
           "\" stroke=\"" + detail::series_color(s) +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"610\" y=\"" + detail::svg_num(ly) + "\">" +
           detail::xml_escape(series[s].label) + "</text>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

inline void write_plot_svg(const std::string& path, PlotMode mode,
                           const std::vector<PlotSeries>& series,
                           const Objective* contour_objective = nullptr) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot open " + path + " for writing");
  out << render_plot_svg(mode, series, contour_objective);
}

/// Load trajectory CSVs and plot them. Legends come from the sidecar config
/// fingerprints when available. Contours are drawn for bundled 2-D test
/// objectives (from the sidecar objective id, or the explicit override).
inline void plot_trajectory_files(const std::vector<std::string>& paths,
                                  PlotMode mode, const std::string& out_path,
                                  const std::string& objective_override = "") {
  std::vector<PlotSeries> series;
  std::string contour_id = objective_override;
  for (const auto& path : paths) {
    LoadedTrajectory loaded = read_trajectory_csv(path);
    PlotSeries s;
    s.label = loaded.label;
    if (mode == PlotMode::trajectory_2d) {
      if (loaded.trajectory.dim != 2) {
        throw unsupported_plot_error(
            path + ": trajectory_2d requires d == 2 with recorded parameters");
      }
      for (const auto& r : loaded.trajectory.records) {
        s.points.emplace_back(r.params[0], r.params[1]);
      }
    } else {
      for (const auto& r : loaded.trajectory.records) {
        s.points.emplace_back(static_cast<double>(r.step), r.loss);
      }
    }
    if (contour_id.empty()) contour_id = loaded.objective_id;
    series.push_back(std::move(s));
  }

  Objective contour;
  const Objective* contour_ptr = nullptr;
  if (mode == PlotMode::trajectory_2d) {
    if (contour_id == "func_a") contour = test_function(TestFunction::a);
    if (contour_id == "func_b") contour = test_function(TestFunction::b);
    if (contour_id == "func_c") contour = test_function(TestFunction::c);
    if (contour.dim == 2) contour_ptr = &contour;
  }
  write_plot_svg(out_path, mode, series, contour_ptr);
}

}  // namespace hizoo
