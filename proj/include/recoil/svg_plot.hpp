#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace recoil {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
  bool markers = false;
};

/// Static line plot with linear axes; NaN samples break the line.
void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series);

}  // namespace recoil
