#pragma once

#include "ssg/harness.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ssg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// One chart with a linear x axis and a base-10 logarithmic y axis.
/// Points with y <= 0 or non-finite coordinates are skipped and break the line.
struct Panel {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<Series> series;
};

/// Panels stacked vertically in a single standalone SVG document.
std::string render_svg(const std::vector<Panel> &panels, int width = 640, int panel_height = 300);

/// e^k and f^k against wall-clock time, one line per named trace.
std::vector<Panel> convergence_panels(const std::vector<std::pair<std::string, std::vector<TraceRecord>>> &runs);

void write_svg(const std::filesystem::path &path, const std::vector<Panel> &panels);

} // namespace ssg
