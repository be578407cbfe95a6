#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sovrisk {

// Minimal dependency-free SVG line charts. Series are plotted against
// their index (time step); NaN values break the polyline.
struct ChartSeries {
    std::string label;
    std::vector<double> values;
    std::string color = "#1f77b4";
};

void write_line_chart_svg(std::ostream& out, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<ChartSeries>& series);

}  // namespace sovrisk
