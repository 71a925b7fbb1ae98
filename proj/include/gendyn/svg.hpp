#pragma once

#include <string>
#include <vector>

namespace gendyn::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 640;
  int height = 420;
};

/// Minimal polyline plot. CSV stays the authoritative output; this is for a
/// quick visual check of reproduce runs.
void write_line_plot(const std::string& path, const std::vector<Series>& series,
                     const PlotOptions& options);

}  // namespace gendyn::svg
