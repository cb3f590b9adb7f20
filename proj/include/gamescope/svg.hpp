#pragma once

// Dependency-free SVG line, scatter and quiver plots. Every plotted point
// carries data-x / data-y attributes holding the exact values written to the
// sibling CSV (shortest round-trip formatting of the same doubles).

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gamescope::io {

/// Shortest representation that parses back to the same double; used for
/// both CSV cells and SVG data attributes.
std::string format_value(double x);

struct Series {
  std::string label;
  std::vector<double> x;
  /// NaN entries are gaps: no marker, and the line is broken there.
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool line = true;
  bool markers = true;
};

struct Band {
  std::vector<double> x;
  std::vector<double> lo;
  std::vector<double> hi;
  std::string color = "#1f77b4";
};

struct Panel {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool log_y = false;
  std::vector<Series> series;
  std::vector<Band> bands;
  /// Dashed vertical reference line.
  std::optional<double> vline;
  /// Dashed horizontal reference line.
  std::optional<double> hline;
};

/// Panels stacked vertically in one document.
void write_svg(std::ostream& out, const std::vector<Panel>& panels, double width = 640, double panel_height = 300);

struct Arrow {
  double x = 0.0;
  double y = 0.0;
  double u = 0.0;
  double v = 0.0;
};

/// Arrows scaled to the grid spacing; attributes data-x, data-y, data-u,
/// data-v carry the unscaled values.
void write_quiver_svg(std::ostream& out, const std::vector<Arrow>& arrows, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel, std::optional<std::pair<double, double>> marker,
                      double size = 520);

}  // namespace gamescope::io
