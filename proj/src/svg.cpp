#include "wassbound/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace wassbound {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string render_svg_chart(const std::string& title, const std::string& x_label,
                             const std::string& y_label, const std::vector<SvgSeries>& series,
                             bool log_y) {
  const double W = 720, H = 480;
  const double ml = 70, mr = 20, mt = 40, mb = 50;  // margins
  const double pw = W - ml - mr, ph = H - mt - mb;

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (log_y && y <= 0) continue;
      const double yy = log_y ? std::log10(y) : y;
      if (first) {
        xmin = xmax = x;
        ymin = ymax = yy;
        first = false;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, yy);
        ymax = std::max(ymax, yy);
      }
    }
  }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;

  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) {
    const double yy = log_y ? std::log10(y) : y;
    return mt + (1.0 - (yy - ymin) / (ymax - ymin)) * ph;
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"15\">"
     << title << "</text>\n";
  // axes
  os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
     << mt + ph << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
     << "\" stroke=\"black\"/>\n";
  // ticks
  for (int i = 0; i <= 5; ++i) {
    const double x = xmin + (xmax - xmin) * i / 5.0;
    os << "<line x1=\"" << px(x) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(x) << "\" y2=\""
       << mt + ph + 4 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << px(x) << "\" y=\"" << mt + ph + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(x)
       << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double yy = ymin + (ymax - ymin) * i / 5.0;
    const double y = log_y ? std::pow(10.0, yy) : yy;
    const double ypix = mt + (1.0 - static_cast<double>(i) / 5.0) * ph;
    os << "<line x1=\"" << ml - 4 << "\" y1=\"" << ypix << "\" x2=\"" << ml << "\" y2=\"" << ypix
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << ypix + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(y)
       << "</text>\n";
  }
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 10
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << mt + ph / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 "
        "16 "
     << mt + ph / 2 << ")\">" << y_label << (log_y ? " (log)" : "") << "</text>\n";

  double legend_y = mt + 14;
  for (const auto& s : series) {
    std::ostringstream pts;
    bool any = false;
    for (const auto& [x, y] : s.points) {
      if (log_y && y <= 0) continue;
      pts << fmt(px(x)) << "," << fmt(py(y)) << " ";
      any = true;
    }
    if (any)
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\""
         << pts.str() << "\"/>\n";
    os << "<line x1=\"" << ml + pw - 150 << "\" y1=\"" << legend_y << "\" x2=\"" << ml + pw - 130
       << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"/>\n";
    os << "<text x=\"" << ml + pw - 124 << "\" y=\"" << legend_y + 4
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.name << "</text>\n";
    legend_y += 16;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace wassbound
