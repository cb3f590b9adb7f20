#include "gamescope/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gamescope/error.hpp"

namespace gamescope::io {

std::string format_value(double x) { return fmt::format("{}", x); }

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(double x) {
    if (!std::isfinite(x)) return;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  void finish() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    } else if (hi - lo <= 1e-300) {
      const double pad = std::max(std::abs(lo) * 0.1, 1e-12);
      lo -= pad;
      hi += pad;
    } else {
      const double pad = 0.04 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
  }
};

// Pixel mapping of one panel; log axes map log10 of positive values.
struct Frame {
  double left, top, width, height;
  Range xr, yr;
  bool log_y;

  double ty(double y) const { return log_y ? std::log10(y) : y; }
  bool plottable_y(double y) const { return std::isfinite(y) && (!log_y || y > 0.0); }
  double px(double x) const { return left + (x - xr.lo) / (xr.hi - xr.lo) * width; }
  double py(double y) const { return top + height - (ty(y) - yr.lo) / (yr.hi - yr.lo) * height; }
};

std::vector<double> ticks(double lo, double hi, int target = 5) {
  const double span = hi - lo;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (span / step <= target) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return out;
}

void write_axes(std::ostream& out, const Frame& f, const Panel& p) {
  fmt::print(out, "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"#333\"/>\n",
             f.left, f.top, f.width, f.height);
  for (double t : ticks(f.xr.lo, f.xr.hi)) {
    const double x = f.px(t);
    fmt::print(out, "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#333\"/>\n", x,
               f.top + f.height, f.top + f.height + 4);
    fmt::print(out, "<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\" text-anchor=\"middle\">{:g}</text>\n", x,
               f.top + f.height + 15, t);
  }
  for (double t : ticks(f.yr.lo, f.yr.hi)) {
    const double y = f.top + f.height - (t - f.yr.lo) / (f.yr.hi - f.yr.lo) * f.height;
    fmt::print(out, "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#333\"/>\n", f.left - 4, y,
               f.left);
    const std::string label = f.log_y ? fmt::format("1e{:g}", t) : fmt::format("{:g}", t);
    fmt::print(out, "<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n", f.left - 6, y + 3,
               label);
  }
  fmt::print(out, "<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
             f.left + f.width / 2, f.top - 8, escape(p.title));
  fmt::print(out, "<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
             f.left + f.width / 2, f.top + f.height + 30, escape(p.xlabel));
  fmt::print(out,
             "<text x=\"{0:.2f}\" y=\"{1:.2f}\" font-size=\"11\" text-anchor=\"middle\" "
             "transform=\"rotate(-90 {0:.2f} {1:.2f})\">{2}</text>\n",
             f.left - 45, f.top + f.height / 2, escape(p.ylabel + (p.log_y ? " (log scale)" : "")));
}

void write_panel(std::ostream& out, const Panel& p, double top, double width, double height) {
  Frame f{70.0, top + 25.0, width - 90.0, height - 70.0, {}, {}, p.log_y};
  for (const Series& s : p.series) {
    if (s.x.size() != s.y.size()) throw ArgumentError("series x and y lengths differ");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!f.plottable_y(s.y[i])) continue;
      f.xr.include(s.x[i]);
      f.yr.include(f.ty(s.y[i]));
    }
  }
  for (const Band& b : p.bands) {
    for (std::size_t i = 0; i < b.x.size(); ++i) {
      f.xr.include(b.x[i]);
      if (f.plottable_y(b.lo[i])) f.yr.include(f.ty(b.lo[i]));
      if (f.plottable_y(b.hi[i])) f.yr.include(f.ty(b.hi[i]));
    }
  }
  if (p.hline && f.plottable_y(*p.hline)) f.yr.include(f.ty(*p.hline));
  f.xr.finish();
  f.yr.finish();

  out << "<g class=\"panel\">\n";
  write_axes(out, f, p);
  for (const Band& b : p.bands) {
    if (b.lo.size() != b.x.size() || b.hi.size() != b.x.size()) throw ArgumentError("band arrays differ in length");
    std::string pts;
    std::string back;
    for (std::size_t i = 0; i < b.x.size(); ++i) {
      if (!f.plottable_y(b.lo[i]) || !f.plottable_y(b.hi[i])) continue;
      pts += fmt::format("{:.2f},{:.2f} ", f.px(b.x[i]), f.py(b.hi[i]));
      back = fmt::format("{:.2f},{:.2f} ", f.px(b.x[i]), f.py(b.lo[i])) + back;
    }
    if (!pts.empty()) {
      fmt::print(out, "<polygon class=\"band\" points=\"{}{}\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\"/>\n", pts,
                 back, b.color);
    }
  }
  if (p.vline && *p.vline >= f.xr.lo && *p.vline <= f.xr.hi) {
    fmt::print(out, "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
               f.px(*p.vline), f.top, f.top + f.height);
  }
  if (p.hline && f.plottable_y(*p.hline)) {
    fmt::print(out, "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
               f.left, f.py(*p.hline), f.left + f.width);
  }
  double legend_y = f.top + 12;
  for (const Series& s : p.series) {
    fmt::print(out, "<g class=\"series\" data-label=\"{}\">\n", escape(s.label));
    if (s.line) {
      std::string pts;
      auto flush = [&] {
        if (pts.empty()) return;
        fmt::print(out, "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n", pts, s.color);
        pts.clear();
      };
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!f.plottable_y(s.y[i])) {
          flush();
          continue;
        }
        pts += fmt::format("{:.2f},{:.2f} ", f.px(s.x[i]), f.py(s.y[i]));
      }
      flush();
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!f.plottable_y(s.y[i])) continue;
      fmt::print(out, "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{}\" fill=\"{}\" data-x=\"{}\" data-y=\"{}\"/>\n",
                 f.px(s.x[i]), f.py(s.y[i]), s.markers ? "2" : "0.6", s.color, format_value(s.x[i]),
                 format_value(s.y[i]));
    }
    out << "</g>\n";
    if (!s.label.empty()) {
      fmt::print(out, "<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\" fill=\"{}\">{}</text>\n", f.left + f.width - 150,
                 legend_y, s.color, escape(s.label));
      legend_y += 13;
    }
  }
  out << "</g>\n";
}

}  // namespace

void write_svg(std::ostream& out, const std::vector<Panel>& panels, double width, double panel_height) {
  const double height = panel_height * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
  fmt::print(out,
             "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
             "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
             "font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
             width, height);
  for (std::size_t i = 0; i < panels.size(); ++i) write_panel(out, panels[i], panel_height * i, width, panel_height);
  out << "</svg>\n";
}

void write_quiver_svg(std::ostream& out, const std::vector<Arrow>& arrows, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel,
                      std::optional<std::pair<double, double>> marker, double size) {
  Panel p;
  p.title = title;
  p.xlabel = xlabel;
  p.ylabel = ylabel;
  Frame f{70.0, 25.0, size - 90.0, size - 70.0, {}, {}, false};
  double longest = 0.0;
  for (const Arrow& a : arrows) {
    f.xr.include(a.x);
    f.yr.include(a.y);
    longest = std::max(longest, std::hypot(a.u, a.v));
  }
  f.xr.finish();
  f.yr.finish();
  // Arrow length proportional to |v|, the longest spanning about one cell.
  const double cells = std::max(1.0, std::sqrt(static_cast<double>(arrows.size())));
  const double reach = 0.9 * std::min(f.width, f.height) / cells;
  fmt::print(out,
             "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
             "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\" "
             "font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
             "<defs><marker id=\"head\" markerWidth=\"6\" markerHeight=\"6\" refX=\"5\" refY=\"3\" orient=\"auto\">"
             "<path d=\"M0,0 L6,3 L0,6 z\" fill=\"#777\"/></marker></defs>\n",
             size);
  write_axes(out, f, p);
  for (const Arrow& a : arrows) {
    const double len = std::hypot(a.u, a.v);
    const double scale = longest > 0.0 ? reach * len / longest : 0.0;
    const double dx = len > 0.0 ? a.u / len * scale : 0.0;
    const double dy = len > 0.0 ? -a.v / len * scale : 0.0;
    const double x0 = f.px(a.x);
    const double y0 = f.py(a.y);
    fmt::print(out,
               "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#777\" marker-end=\"url(#head)\" "
               "data-x=\"{}\" data-y=\"{}\" data-u=\"{}\" data-v=\"{}\"/>\n",
               x0, y0, x0 + dx, y0 + dy, format_value(a.x), format_value(a.y), format_value(a.u), format_value(a.v));
  }
  if (marker) {
    fmt::print(out, "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"#d62728\" data-x=\"{}\" data-y=\"{}\"/>\n",
               f.px(marker->first), f.py(marker->second), format_value(marker->first), format_value(marker->second));
  }
  out << "</svg>\n";
}

}  // namespace gamescope::io
