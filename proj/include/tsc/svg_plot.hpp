#pragma once

#include <string>
#include <utility>
#include <vector>

namespace tsc {

struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

// Standalone SVG line chart; no external rendering dependencies.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<PlotSeries>& series);

}  // namespace tsc
