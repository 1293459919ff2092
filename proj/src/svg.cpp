#include "refpred/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace refpred {

namespace {

constexpr int kWidth = 960;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 60;
constexpr int kMarginRight = 170;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 70;

const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                          "#8172b3", "#937860", "#da8bc3", "#8c8c8c"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

double y_of(double value) {
    const double clamped = std::clamp(value, 0.0, 1.0);
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    return kMarginTop + plot_h * (1.0 - clamped);
}

void header(std::ostringstream& os, const std::string& title, const std::string& comment) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
       << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    if (!comment.empty()) os << "<!-- " << escape(comment) << " -->\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
       << escape(title) << "</text>\n";
    // Axis and horizontal grid lines at 0, 0.25, ..., 1.
    for (int t = 0; t <= 4; ++t) {
        const double v = 0.25 * t;
        const double y = y_of(v);
        os << "<line x1=\"" << kMarginLeft << "\" y1=\"" << fmt(y) << "\" x2=\""
           << kWidth - kMarginRight << "\" y2=\"" << fmt(y)
           << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        os << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << fmt(y + 4)
           << "\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
    }
}

void legend(std::ostringstream& os, const std::vector<ChartSeries>& series) {
    for (std::size_t s = 0; s < series.size(); ++s) {
        const int y = kMarginTop + 18 * static_cast<int>(s);
        os << "<rect x=\"" << kWidth - kMarginRight + 12 << "\" y=\"" << y
           << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[s % 8] << "\"/>\n";
        os << "<text x=\"" << kWidth - kMarginRight + 30 << "\" y=\"" << y + 10 << "\">"
           << escape(series[s].name) << "</text>\n";
    }
}

}  // namespace

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& groups,
                          const std::vector<ChartSeries>& series, const std::string& comment) {
    if (groups.empty() || series.empty())
        throw std::invalid_argument("svg_bar_chart: nothing to draw");
    for (const ChartSeries& s : series)
        if (s.values.size() != groups.size())
            throw std::invalid_argument("svg_bar_chart: series length mismatch");

    std::ostringstream os;
    header(os, title, comment);
    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double group_w = plot_w / static_cast<double>(groups.size());
    const double bar_w = group_w * 0.8 / static_cast<double>(series.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double x0 = kMarginLeft + group_w * static_cast<double>(g) + group_w * 0.1;
        for (std::size_t s = 0; s < series.size(); ++s) {
            const double v = series[s].values[g];
            const double y = y_of(v);
            const double h = y_of(0.0) - y;
            os << "<rect x=\"" << fmt(x0 + bar_w * static_cast<double>(s)) << "\" y=\"" << fmt(y)
               << "\" width=\"" << fmt(bar_w) << "\" height=\"" << fmt(h) << "\" fill=\""
               << kPalette[s % 8] << "\"/>\n";
        }
        os << "<text x=\"" << fmt(kMarginLeft + group_w * (static_cast<double>(g) + 0.5))
           << "\" y=\"" << kHeight - kMarginBottom + 18
           << "\" text-anchor=\"middle\" font-size=\"10\">" << escape(groups[g]) << "</text>\n";
    }
    legend(os, series);
    os << "</svg>\n";
    return os.str();
}

std::string svg_line_chart(const std::string& title, const std::vector<double>& xs,
                           const std::vector<ChartSeries>& series, const std::string& comment) {
    if (xs.empty() || series.empty())
        throw std::invalid_argument("svg_line_chart: nothing to draw");
    for (const ChartSeries& s : series)
        if (s.values.size() != xs.size())
            throw std::invalid_argument("svg_line_chart: series length mismatch");

    std::ostringstream os;
    header(os, title, comment);
    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double x_min = *std::min_element(xs.begin(), xs.end());
    const double x_max = *std::max_element(xs.begin(), xs.end());
    const double span = x_max > x_min ? x_max - x_min : 1.0;
    const auto x_of = [&](double x) { return kMarginLeft + plot_w * (x - x_min) / span; };
    for (std::size_t s = 0; s < series.size(); ++s) {
        os << "<polyline fill=\"none\" stroke=\"" << kPalette[s % 8]
           << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i)
            os << fmt(x_of(xs[i])) << ',' << fmt(y_of(series[s].values[i])) << ' ';
        os << "\"/>\n";
        for (std::size_t i = 0; i < xs.size(); ++i)
            os << "<circle cx=\"" << fmt(x_of(xs[i])) << "\" cy=\""
               << fmt(y_of(series[s].values[i])) << "\" r=\"3\" fill=\"" << kPalette[s % 8]
               << "\"/>\n";
    }
    for (double x : xs)
        os << "<text x=\"" << fmt(x_of(x)) << "\" y=\"" << kHeight - kMarginBottom + 18
           << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt(x) << "</text>\n";
    legend(os, series);
    os << "</svg>\n";
    return os.str();
}

}  // namespace refpred
