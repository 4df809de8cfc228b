#pragma once

#include <string>
#include <vector>

#include "aot/trace.hpp"

namespace aot::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label = "layer";
  std::string y_label = "SNR";
  bool log_y = false;
  int width = 640;
  int height = 400;
};

/// Self-contained SVG document. Points with non-finite y (or y <= 0 on a log
/// axis) are skipped and break the polyline.
std::string line_chart(const std::vector<Series>& series, const ChartOptions& options);

/// One series per cluster, SNR against layer.
std::string snr_chart(const DenoiseTrace& trace, const ChartOptions& options);

}  // namespace aot::svg
