#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lockscale::cli {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool markers = false;  ///< draw points instead of a line
};

struct PlotOptions {
  std::string title;
  std::string x_label = "cores";
  std::string y_label = "throughput (completions/cycle)";
  bool log_x = false;
  int width = 720;
  int height = 480;
};

/// Minimal line chart: axes with ticks, one polyline (or marker set) per
/// series, and a legend.
std::string render_svg(std::span<const PlotSeries> series, const PlotOptions& options);

}  // namespace lockscale::cli
