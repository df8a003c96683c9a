#pragma once

#include <string>
#include <vector>

namespace qdrive {

// A grouped bar chart; every bar can be subdivided into stacked segments
// (one segment = a plain bar chart).  values[group][series][segment] must be
// rectangular and non-negative.
struct BarChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> group_labels;    // one cluster per label
  std::vector<std::string> series_labels;   // one bar per series in a cluster
  std::vector<std::string> segment_labels;  // stack segments, bottom first
  std::vector<std::vector<std::vector<double>>> values;
  double y_max = 0.0;  // 0 = derive from the data
};

// Renders a self-contained SVG document.  Throws std::invalid_argument on
// shape mismatches or negative values.
std::string render_bar_chart(const BarChartSpec& spec);

}  // namespace qdrive
