#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace octskin {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotStyle {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width_px = 800;
  int height_px = 500;
  bool markers = true;
};

/// Renders a simple multi-series line chart and writes it as a PNG.
void write_line_plot(const std::vector<PlotSeries>& series, const PlotStyle& style,
                     const std::filesystem::path& path);

}  // namespace octskin
