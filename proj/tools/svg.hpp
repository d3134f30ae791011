#pragma once

// Minimal self-contained SVG line plots: one or more panels side by side,
// each with its own data box, axes and labelled polylines.

#include <string>
#include <vector>

namespace cli {

struct Series {
  std::vector<double> x, y;
  std::string color = "black";
  bool dashed = false;
  double width = 1.5;
  std::string label;
  bool markers = false;  // draw a dot at each point instead of a line
};

struct Panel {
  std::string title, xlabel, ylabel;
  std::vector<Series> series;
};

std::string render_svg(const std::vector<Panel>& panels, double panel_w = 420, double panel_h = 360);
void write_svg(const std::string& path, const std::vector<Panel>& panels);

}  // namespace cli
