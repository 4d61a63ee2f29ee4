#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ps {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

struct PlotSpec {
  std::string title;
  std::string xlabel, ylabel;
  bool log_x = true;
  bool log_y = true;
  int width = 720, height = 480;
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

inline std::string fmt(double v, int prec = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

}  // namespace detail

/// Self-contained SVG line plot. On log axes non-positive values are skipped (they have no position),
/// which drops exact zeros of the relative error from the picture.
inline std::string render_svg(const PlotSpec& spec, const std::vector<PlotSeries>& series) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};
  auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0) && (!spec.log_y || y > 0);
  };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (spec.log_x) x0 = std::floor(x0), x1 = std::max(std::ceil(x1), x0 + 1);
  if (spec.log_y) y0 = std::floor(y0), y1 = std::max(std::ceil(y1), y0 + 1);
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;

  const double ml = 80, mr = 160, mt = 40, mb = 56;
  const double pw = spec.width - ml - mr, ph = spec.height - mt - mb;
  auto px = [&](double v) { return ml + (v - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return mt + ph - (v - y0) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << spec.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << detail::svg_escape(spec.title) << "</text>\n";

  auto ticks = [](double lo, double hi, bool log) {
    std::vector<double> t;
    if (log) {
      const int step = std::max(1, static_cast<int>(std::ceil((hi - lo) / 8)));
      for (double v = lo; v <= hi + 1e-9; v += step) t.push_back(v);
    } else {
      const double span = hi - lo, raw = span / 6;
      const double mag = std::pow(10.0, std::floor(std::log10(raw)));
      const double st = raw / mag < 2 ? 2 * mag : raw / mag < 5 ? 5 * mag : 10 * mag;
      for (double v = std::ceil(lo / st) * st; v <= hi + 1e-9 * span; v += st) t.push_back(v);
    }
    return t;
  };
  auto label = [](double v, bool log) { return log ? "1e" + detail::fmt(v, 3) : detail::fmt(v); };
  for (double v : ticks(x0, x1, spec.log_x)) {
    o << "<line x1=\"" << px(v) << "\" y1=\"" << mt << "\" x2=\"" << px(v) << "\" y2=\"" << mt + ph
      << "\" stroke=\"#e0e0e0\"/>\n";
    o << "<text x=\"" << px(v) << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\">" << label(v, spec.log_x)
      << "</text>\n";
  }
  for (double v : ticks(y0, y1, spec.log_y)) {
    o << "<line x1=\"" << ml << "\" y1=\"" << py(v) << "\" x2=\"" << ml + pw << "\" y2=\"" << py(v)
      << "\" stroke=\"#e0e0e0\"/>\n";
    o << "<text x=\"" << ml - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << label(v, spec.log_y)
      << "</text>\n";
  }
  o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << ml + pw / 2 << "\" y=\"" << spec.height - 12 << "\" text-anchor=\"middle\">"
    << detail::svg_escape(spec.xlabel) << "</text>\n";
  o << "<text transform=\"translate(18," << mt + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << detail::svg_escape(spec.ylabel) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* colour = palette[si % (sizeof palette / sizeof *palette)];
    std::ostringstream pts;
    std::size_t count = 0;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      pts << px(tx(s.x[i])) << ',' << py(ty(s.y[i])) << ' ';
      ++count;
    }
    if (count > 0)
      o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"" << pts.str()
        << "\"/>\n";
    const double ly = mt + 10 + 18.0 * static_cast<double>(si);
    o << "<line x1=\"" << ml + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 36 << "\" y2=\"" << ly
      << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << ml + pw + 42 << "\" y=\"" << ly + 4 << "\">" << detail::svg_escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

inline void write_svg(const std::string& path, const PlotSpec& spec, const std::vector<PlotSeries>& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << render_svg(spec, series);
}

}  // namespace ps
