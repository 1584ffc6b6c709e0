#pragma once

// Minimal static SVG line plot with a log10 y axis, used for convergence
// curves of normalized errors against iteration.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace oadp {

struct PlotSeries {
  std::string label;
  std::vector<double> values;  // y at x = 0, 1, 2, ...
  std::string color = "#1f77b4";
};

inline std::string svg_escape(const std::string& s) {
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

/// Non-positive and non-finite values are skipped (they have no log).
inline void write_log_plot_svg(std::ostream& os, const std::vector<PlotSeries>& series,
                               const std::string& title, const std::string& xlabel = "iteration",
                               const std::string& ylabel = "normalized error") {
  const double width = 720, height = 440, left = 80, right = 170, top = 40, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;

  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  std::size_t xmax = 1;
  for (const auto& s : series) {
    xmax = std::max(xmax, s.values.size() > 1 ? s.values.size() - 1 : std::size_t{1});
    for (double v : s.values)
      if (std::isfinite(v) && v > 0.0) {
        ymin = std::min(ymin, std::log10(v));
        ymax = std::max(ymax, std::log10(v));
      }
  }
  if (!std::isfinite(ymin)) {
    ymin = -1.0;
    ymax = 0.0;
  }
  double lo = std::floor(ymin), hi = std::ceil(ymax);
  if (hi <= lo) hi = lo + 1.0;

  auto px = [&](double x) { return left + pw * x / static_cast<double>(xmax); };
  auto py = [&](double ly) { return top + ph * (hi - ly) / (hi - lo); };

  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"15\">"
     << svg_escape(title) << "</text>\n";

  // decades on y
  const int step = std::max(1, static_cast<int>((hi - lo) / 8.0 + 0.999));
  for (int d = static_cast<int>(lo); d <= static_cast<int>(hi); d += step) {
    const double y = py(d);
    os << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << left + pw << "\" y2=\"" << y
       << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << y + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" << d
       << "</text>\n";
  }
  // a handful of x ticks
  const std::size_t xstep = std::max<std::size_t>(1, (xmax + 5) / 6);
  for (std::size_t x = 0; x <= xmax; x += xstep) {
    const double xx = px(static_cast<double>(x));
    os << "<line x1=\"" << xx << "\" y1=\"" << top + ph << "\" x2=\"" << xx << "\" y2=\""
       << top + ph + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << xx << "\" y=\"" << top + ph + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << x
       << "</text>\n";
  }
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 18
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
     << svg_escape(xlabel) << "</text>\n";
  os << "<text transform=\"translate(20," << top + ph / 2
     << ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
     << svg_escape(ylabel) << "</text>\n";

  double legend_y = top + 10;
  for (const auto& s : series) {
    std::ostringstream pts;
    pts << std::fixed << std::setprecision(2);
    bool any = false;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const double v = s.values[i];
      if (!std::isfinite(v) || v <= 0.0) continue;
      pts << px(static_cast<double>(i)) << ',' << py(std::log10(v)) << ' ';
      any = true;
    }
    if (any)
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.6\" points=\""
         << pts.str() << "\"/>\n";
    os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << legend_y << "\" x2=\""
       << left + pw + 36 << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw + 42 << "\" y=\"" << legend_y + 4
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << svg_escape(s.label) << "</text>\n";
    legend_y += 20;
  }
  os << "</svg>\n";
}

}  // namespace oadp
