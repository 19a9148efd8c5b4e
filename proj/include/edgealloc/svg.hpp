#pragma once

#include <string>
#include <utility>
#include <vector>

#include "edgealloc/model.hpp"
#include "edgealloc/scenario.hpp"

namespace edgealloc {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

std::string render_svg(const LineChart& chart, int width = 720, int height = 420);

/// Charts for a sweep, keyed by a file stem: one per task showing every node's
/// runs, plus per-group achieved QoS against q_m.
std::vector<std::pair<std::string, LineChart>> trace_charts(const PolicyTrace& trace,
                                                            const NetworkSpec& base);

}  // namespace edgealloc
