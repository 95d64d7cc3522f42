#pragma once

// Minimal self-contained SVG line plot, enough for convergence traces.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

namespace roundflow {

inline void write_svg_line_plot(std::ostream& os, std::vector<double> xs,
                                std::vector<double> ys,
                                const std::string& title,
                                bool log_y = true) {
  const int w = 640, h = 400, ml = 70, mr = 20, mt = 40, mb = 50;
  if (log_y)
    for (double& y : ys) y = std::log10(std::max(y, 1e-300));
  double x0 = xs.empty() ? 0 : *std::min_element(xs.begin(), xs.end());
  double x1 = xs.empty() ? 1 : *std::max_element(xs.begin(), xs.end());
  double y0 = ys.empty() ? 0 : *std::min_element(ys.begin(), ys.end());
  double y1 = ys.empty() ? 1 : *std::max_element(ys.begin(), ys.end());
  if (x1 - x0 < 1e-12) x1 = x0 + 1;
  if (y1 - y0 < 1e-12) y1 = y0 + 1;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (w - ml - mr); };
  auto py = [&](double y) {
    return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);
  };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
     << "\" height=\"" << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"15\">"
     << title << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
     << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
     << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4.0;
    os << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
          "font-size=\"11\">"
       << (log_y ? "1e" + std::to_string(static_cast<int>(std::round(yv)))
                 : std::to_string(yv))
       << "</text>\n";
    const double xv = x0 + (x1 - x0) * k / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << h - mb + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"11\">"
       << xv << "</text>\n";
  }
  os << "<polyline fill=\"none\" stroke=\"#c62828\" stroke-width=\"1.5\" "
        "points=\"";
  for (size_t i = 0; i < xs.size() && i < ys.size(); ++i)
    os << px(xs[i]) << "," << py(ys[i]) << " ";
  os << "\"/>\n</svg>\n";
}

}  // namespace roundflow
