#pragma once

#include <string>
#include <vector>

namespace wassbound {

struct SvgSeries {
  std::string name;
  std::string color;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

/// Self-contained SVG line chart (no external assets). log_y drops
/// non-positive values from the plot.
std::string render_svg_chart(const std::string& title, const std::string& x_label,
                             const std::string& y_label, const std::vector<SvgSeries>& series,
                             bool log_y = true);

}  // namespace wassbound
