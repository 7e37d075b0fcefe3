#pragma once

// Static SVG plots: actual-vs-predicted overlay and a horizontal bar chart
// of per-IMF importance shares. Output is a pure function of the inputs, so
// identical artifacts render to byte-identical files.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "imfcast/attribution.hpp"

namespace imfcast {

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string polyline_points(const std::vector<std::size_t>& t,
                                   const std::vector<double>& y, double x0, double x1,
                                   double y0, double y1, double t_min, double t_max,
                                   double v_min, double v_max) {
  const double t_span = std::max(t_max - t_min, 1.0);
  const double v_span = std::max(v_max - v_min, 1e-30);
  std::string pts;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double px = x0 + (static_cast<double>(t[i]) - t_min) / t_span * (x1 - x0);
    const double py = y1 - (y[i] - v_min) / v_span * (y1 - y0);
    pts += svg_num(px) + "," + svg_num(py) + " ";
  }
  if (!pts.empty()) pts.pop_back();
  return pts;
}

}  // namespace detail

inline void write_overlay_svg(const std::string& path, const std::vector<std::size_t>& t,
                              const std::vector<double>& actual,
                              const std::vector<double>& predicted, const std::string& title,
                              const std::string& meta = {}) {
  if (t.empty() || t.size() != actual.size() || t.size() != predicted.size()) {
    throw std::invalid_argument("write_overlay_svg: empty or mismatched inputs");
  }
  const double width = 900, height = 420;
  const double x0 = 60, x1 = width - 20, y0 = 40, y1 = height - 40;
  const double t_min = static_cast<double>(t.front());
  const double t_max = static_cast<double>(t.back());
  double v_min = actual[0], v_max = actual[0];
  for (const auto& series : {actual, predicted}) {
    for (const double v : series) {
      v_min = std::min(v_min, v);
      v_max = std::max(v_max, v);
    }
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  if (!meta.empty()) out << "<!-- " << meta << " -->\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << (width / 2) << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
  out << "<line x1=\"" << x0 << "\" y1=\"" << y1 << "\" x2=\"" << x1 << "\" y2=\"" << y1
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
      << "\" stroke=\"black\"/>\n";
  out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.2\" points=\""
      << detail::polyline_points(t, actual, x0, x1, y0, y1, t_min, t_max, v_min, v_max)
      << "\"/>\n";
  out << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.2\" points=\""
      << detail::polyline_points(t, predicted, x0, x1, y0, y1, t_min, t_max, v_min, v_max)
      << "\"/>\n";
  out << "<text x=\"" << (x1 - 170) << "\" y=\"" << (y0 + 6) << "\" font-family=\"sans-serif\" "
      << "font-size=\"12\" fill=\"#1f77b4\">actual</text>\n";
  out << "<text x=\"" << (x1 - 100) << "\" y=\"" << (y0 + 6) << "\" font-family=\"sans-serif\" "
      << "font-size=\"12\" fill=\"#d62728\">predicted</text>\n";
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

// Horizontal bars, sorted by share, largest on top.
inline void write_importance_svg(const std::string& path, const AttributionReport& rep,
                                 const std::string& title, const std::string& meta = {}) {
  if (rep.percent.empty()) throw std::invalid_argument("write_importance_svg: empty report");
  std::vector<std::size_t> order(rep.percent.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rep.percent[a] != rep.percent[b]) return rep.percent[a] > rep.percent[b];
    return a < b;
  });
  const double bar_h = 22, gap = 8;
  const double width = 720;
  const double height = 70 + static_cast<double>(order.size()) * (bar_h + gap);
  const double x0 = 120, x1 = width - 80;
  const double max_pct = std::max(rep.percent[order.front()], 1e-12);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  if (!meta.empty()) out << "<!-- " << meta << " -->\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << (width / 2) << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
  double y = 50;
  for (const std::size_t c : order) {
    const double w = (x1 - x0) * rep.percent[c] / max_pct;
    out << "<text x=\"" << (x0 - 8) << "\" y=\"" << detail::svg_num(y + bar_h * 0.7)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
        << rep.channel_names[c] << "</text>\n";
    out << "<rect x=\"" << x0 << "\" y=\"" << detail::svg_num(y) << "\" width=\""
        << detail::svg_num(w) << "\" height=\"" << bar_h << "\" fill=\"#2ca02c\"/>\n";
    char label[32];
    std::snprintf(label, sizeof(label), "%.2f%%", rep.percent[c]);
    out << "<text x=\"" << detail::svg_num(x0 + w + 6) << "\" y=\""
        << detail::svg_num(y + bar_h * 0.7)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << label << "</text>\n";
    y += bar_h + gap;
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace imfcast
