#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "prism/core_series.hpp"

namespace prism {

struct PlotLine {
    std::string label;
    /// Non-finite values break the polyline.
    WeeklySeries values;
};

/// Minimal SVG line chart: axes, min/max tick labels, one polyline per line, a legend.
void write_line_plot_svg(std::ostream& out, const std::string& title,
                         const std::vector<PlotLine>& lines, int width = 900, int height = 420);

} // namespace prism
