#pragma once

#include <string>
#include <vector>

namespace refpred {

struct ChartSeries {
    std::string name;
    std::vector<double> values;  // one per group / x position
};

// Grouped vertical bars, y fixed to [0, 1]. Deterministic text output.
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& groups,
                          const std::vector<ChartSeries>& series, const std::string& comment);

// Polyline chart over numeric x positions, y fixed to [0, 1].
std::string svg_line_chart(const std::string& title, const std::vector<double>& xs,
                           const std::vector<ChartSeries>& series, const std::string& comment);

}  // namespace refpred
