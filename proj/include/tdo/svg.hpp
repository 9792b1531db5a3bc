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

namespace tdo {

struct PlotSeries {
  std::string label;
  std::vector<double> xs, ys;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct RuleLine {
  double value = 0.0;
  std::string label;
  std::string color = "#d62728";
};

struct PlotPanel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  std::vector<RuleLine> rules;
  bool log_y = false;
};

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> p = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b",
                                             "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79"};
  return p;
}

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace detail

/// Panels stacked vertically in one self-contained SVG document.
inline std::string render_svg(const std::vector<PlotPanel>& panels, const std::string& run_id = "",
                              int width = 820, int panel_height = 260) {
  if (panels.empty()) throw std::invalid_argument("render_svg: no panels");
  const double ml = 70, mr = 170, mt = 30, mb = 45;
  const int height = panel_height * static_cast<int>(panels.size());
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
     << (run_id.empty() ? std::string() : "<desc>run_id=" + xml_escape(run_id) + "</desc>\n")
     << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const PlotPanel& panel = panels[p];
    const double top = static_cast<double>(p) * panel_height;
    const double x0 = ml, x1 = width - mr, y0 = top + mt, y1 = top + panel_height - mb;
    auto ty = [&](double v) { return panel.log_y ? std::log10(v) : v; };

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const PlotSeries& s : panel.series) {
      if (s.xs.size() != s.ys.size()) throw std::invalid_argument("render_svg: series length mismatch");
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i]) || (panel.log_y && s.ys[i] <= 0.0)) continue;
        xmin = std::min(xmin, s.xs[i]);
        xmax = std::max(xmax, s.xs[i]);
        ymin = std::min(ymin, ty(s.ys[i]));
        ymax = std::max(ymax, ty(s.ys[i]));
      }
    }
    for (const RuleLine& r : panel.rules) {
      if (panel.log_y && r.value <= 0.0) continue;
      ymin = std::min(ymin, ty(r.value));
      ymax = std::max(ymax, ty(r.value));
    }
    if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0;
    if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymin -= 0.5, ymax += 0.5;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    auto px = [&](double x) { return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0); };
    auto py = [&](double y) { return y1 - (y - ymin) / (ymax - ymin) * (y1 - y0); };

    os << "<g>\n";
    os << "<text x=\"" << detail::num(x0) << "\" y=\"" << detail::num(top + 18) << "\" font-size=\"13\">"
       << xml_escape(panel.title) << "</text>\n";
    os << "<rect x=\"" << detail::num(x0) << "\" y=\"" << detail::num(y0) << "\" width=\"" << detail::num(x1 - x0)
       << "\" height=\"" << detail::num(y1 - y0) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double xv = xmin + (xmax - xmin) * t / 4.0;
      const double yv = ymin + (ymax - ymin) * t / 4.0;
      os << "<text x=\"" << detail::num(px(xv)) << "\" y=\"" << detail::num(y1 + 14)
         << "\" text-anchor=\"middle\">" << detail::tick(xv) << "</text>\n";
      const std::string ylab = panel.log_y ? "1e" + detail::tick(yv) : detail::tick(yv);
      os << "<text x=\"" << detail::num(x0 - 5) << "\" y=\"" << detail::num(py(yv) + 4)
         << "\" text-anchor=\"end\">" << xml_escape(ylab) << "</text>\n";
    }
    os << "<text x=\"" << detail::num(0.5 * (x0 + x1)) << "\" y=\"" << detail::num(y1 + 32)
       << "\" text-anchor=\"middle\">" << xml_escape(panel.x_label) << "</text>\n";
    os << "<text x=\"14\" y=\"" << detail::num(0.5 * (y0 + y1)) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
       << detail::num(0.5 * (y0 + y1)) << ")\">" << xml_escape(panel.y_label) << "</text>\n";

    for (const RuleLine& r : panel.rules) {
      if (panel.log_y && r.value <= 0.0) continue;
      const double yy = py(ty(r.value));
      os << "<line x1=\"" << detail::num(x0) << "\" y1=\"" << detail::num(yy) << "\" x2=\"" << detail::num(x1)
         << "\" y2=\"" << detail::num(yy) << "\" stroke=\"" << r.color << "\" stroke-dasharray=\"6,4\"/>\n";
      if (!r.label.empty()) {
        os << "<text x=\"" << detail::num(x1 + 4) << "\" y=\"" << detail::num(yy + 4) << "\" fill=\"" << r.color
           << "\">" << xml_escape(r.label) << "</text>\n";
      }
    }
    int legend = 0;
    for (const PlotSeries& s : panel.series) {
      std::ostringstream pts;
      bool any = false;
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i]) || (panel.log_y && s.ys[i] <= 0.0)) continue;
        pts << (any ? " " : "") << detail::num(px(s.xs[i])) << ',' << detail::num(py(ty(s.ys[i])));
        any = true;
      }
      if (any) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
           << (s.dashed ? " stroke-dasharray=\"4,3\"" : "") << " points=\"" << pts.str() << "\"/>\n";
      }
      if (!s.label.empty()) {
        const double ly = y0 + 12 + 14 * legend++;
        os << "<line x1=\"" << detail::num(x1 + 6) << "\" y1=\"" << detail::num(ly - 4) << "\" x2=\""
           << detail::num(x1 + 22) << "\" y2=\"" << detail::num(ly - 4) << "\" stroke=\"" << s.color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << detail::num(x1 + 26) << "\" y=\"" << detail::num(ly) << "\">" << xml_escape(s.label)
           << "</text>\n";
      }
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline void save_svg(const std::string& path, const std::vector<PlotPanel>& panels, const std::string& run_id = "") {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_svg: cannot open '" + path + "'");
  out << render_svg(panels, run_id);
}

}  // namespace tdo
