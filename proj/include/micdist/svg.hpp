#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace micdist {

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
  bool markers = false;  // dots instead of a polyline
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  std::vector<ChartSeries> series;
};

// Standalone SVG document. Non-finite points are skipped.
void write_svg(std::ostream& out, const LineChart& chart);

}  // namespace micdist
