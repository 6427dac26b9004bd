#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "uavcran/io/csv_log.hpp"

namespace uavcran::io {

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline const char* series_color(std::size_t j) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  return colors[j % 6];
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  void pad() {
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double m = 0.05 * (hi - lo);
    lo -= m;
    hi += m;
  }
};

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Line chart with a frame, five ticks per axis, axis labels and a legend.
inline std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<Series>& series, bool equal_aspect) {
  constexpr double width = 640, height = 480, left = 70, right = 20, top = 40, bottom = 60;
  Range xr, yr;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      xr.add(x);
      yr.add(y);
    }
  xr.pad();
  yr.pad();
  const double pw = width - left - right, ph = height - top - bottom;
  if (equal_aspect) {
    const double sx = (xr.hi - xr.lo) / pw, sy = (yr.hi - yr.lo) / ph;
    const double s = std::max(sx, sy);
    const double cx = 0.5 * (xr.lo + xr.hi), cy = 0.5 * (yr.lo + yr.hi);
    xr = {cx - 0.5 * s * pw, cx + 0.5 * s * pw};
    yr = {cy - 0.5 * s * ph, cy + 0.5 * s * ph};
  }
  auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return top + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n";
  svg += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" + title +
         "</text>\n";
  svg += "<rect x=\"70\" y=\"40\" width=\"550\" height=\"380\" fill=\"none\" stroke=\"black\"/>\n";
  for (int j = 0; j <= 4; ++j) {
    const double xv = xr.lo + j * (xr.hi - xr.lo) / 4.0;
    const double yv = yr.lo + j * (yr.hi - yr.lo) / 4.0;
    svg += "<line x1=\"" + fmt("%.2f", px(xv)) + "\" y1=\"420\" x2=\"" + fmt("%.2f", px(xv)) +
           "\" y2=\"425\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt("%.2f", px(xv)) +
           "\" y=\"440\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt("%.4g", xv) +
           "</text>\n";
    svg += "<line x1=\"65\" y1=\"" + fmt("%.2f", py(yv)) + "\" x2=\"70\" y2=\"" + fmt("%.2f", py(yv)) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"62\" y=\"" + fmt("%.2f", py(yv) + 4.0) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt("%.4g", yv) + "</text>\n";
  }
  svg += "<text x=\"345\" y=\"470\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + xlabel +
         "</text>\n";
  svg += "<text x=\"16\" y=\"230\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 16 230)\">" +
         ylabel + "</text>\n";
  for (std::size_t j = 0; j < series.size(); ++j) {
    const auto& s = series[j];
    if (s.points.empty()) continue;
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(series_color(j)) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t p = 0; p < s.points.size(); ++p) {
      if (p) svg += ' ';
      svg += fmt("%.2f", px(s.points[p].first)) + "," + fmt("%.2f", py(s.points[p].second));
    }
    svg += "\"/>\n";
    const auto& first = s.points.front();
    svg += "<circle cx=\"" + fmt("%.2f", px(first.first)) + "\" cy=\"" + fmt("%.2f", py(first.second)) +
           "\" r=\"3\" fill=\"" + series_color(j) + "\"/>\n";
    svg += "<text x=\"" + fmt("%.0f", 80.0) + "\" y=\"" + fmt("%.0f", 56.0 + 16.0 * static_cast<double>(j)) +
           "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" + series_color(j) + "\">" + s.label +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace detail

/// x-y trajectory of every UAV in the log.
inline std::string trajectory_svg(const std::vector<CsvRow>& rows) {
  std::map<int, detail::Series> by_uav;
  for (const auto& r : rows) {
    auto& s = by_uav[r.uav_id];
    s.label = "UAV " + std::to_string(r.uav_id);
    s.points.emplace_back(r.x, r.y);
  }
  std::vector<detail::Series> series;
  for (auto& [id, s] : by_uav) series.push_back(std::move(s));
  return detail::line_chart("UAV trajectories", "x [m]", "y [m]", series, true);
}

/// Min-rate over time (one value per sample).
inline std::string rate_svg(const std::vector<CsvRow>& rows) {
  detail::Series s;
  s.label = "min rate";
  for (const auto& r : rows)
    if (r.uav_id == 1) s.points.emplace_back(r.t, r.r_min);
  return detail::line_chart("Minimum rate", "t [s]", "R_min [bits/channel use]", {s}, false);
}

}  // namespace uavcran::io
