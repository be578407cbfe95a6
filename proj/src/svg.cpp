#include "sovrisk/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace sovrisk {

namespace {

constexpr double kWidth = 860.0;
constexpr double kHeight = 460.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

void write_line_chart_svg(std::ostream& out, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<ChartSeries>& series) {
    if (series.empty()) throw std::invalid_argument("svg chart: no series");
    std::size_t n = 0;
    double y_min = std::numeric_limits<double>::infinity();
    double y_max = -std::numeric_limits<double>::infinity();
    for (const auto& s : series) {
        n = std::max(n, s.values.size());
        for (double v : s.values)
            if (!std::isnan(v)) {
                y_min = std::min(y_min, v);
                y_max = std::max(y_max, v);
            }
    }
    if (n < 2 || !(y_min <= y_max)) throw std::invalid_argument("svg chart: not enough data");
    if (y_max == y_min) {
        y_max += 1.0;
        y_min -= 1.0;
    }
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto x_at = [&](std::size_t i) {
        return kLeft + plot_w * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    auto y_at = [&](double v) { return kTop + plot_h * (1.0 - (v - y_min) / (y_max - y_min)); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
        << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

    // axes
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft)
        << "\" y2=\"" << num(kTop + plot_h) << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + plot_h) << "\" x2=\""
        << num(kLeft + plot_w) << "\" y2=\"" << num(kTop + plot_h) << "\" stroke=\"black\"/>\n";

    // y ticks
    for (int k = 0; k <= 4; ++k) {
        const double v = y_min + (y_max - y_min) * k / 4.0;
        const double y = y_at(v);
        out << "<line x1=\"" << num(kLeft - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kLeft)
            << "\" y2=\"" << num(y) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(v)
            << "</text>\n";
    }
    // x ticks
    for (int k = 0; k <= 4; ++k) {
        const auto i = static_cast<std::size_t>(std::llround((n - 1) * k / 4.0));
        const double x = x_at(i);
        out << "<line x1=\"" << num(x) << "\" y1=\"" << num(kTop + plot_h) << "\" x2=\"" << num(x)
            << "\" y2=\"" << num(kTop + plot_h + 4) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << num(x) << "\" y=\"" << num(kTop + plot_h + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << i
            << "</text>\n";
    }
    out << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 12)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << num(kTop + plot_h / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        << "transform=\"rotate(-90 16 " << num(kTop + plot_h / 2) << ")\">" << y_label
        << "</text>\n";

    for (const auto& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        bool in_segment = false;
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            const double v = s.values[i];
            if (std::isnan(v)) {
                if (in_segment) {
                    out << "\"/>\n<polyline fill=\"none\" stroke=\"" << s.color
                        << "\" stroke-width=\"1.5\" points=\"";
                    in_segment = false;
                }
                continue;
            }
            out << num(x_at(i)) << ',' << num(y_at(v)) << ' ';
            in_segment = true;
        }
        out << "\"/>\n";
    }

    // legend
    double ly = kTop + 8.0;
    for (const auto& s : series) {
        out << "<line x1=\"" << num(kLeft + plot_w - 150) << "\" y1=\"" << num(ly) << "\" x2=\""
            << num(kLeft + plot_w - 125) << "\" y2=\"" << num(ly) << "\" stroke=\"" << s.color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << num(kLeft + plot_w - 118) << "\" y=\"" << num(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
        ly += 16.0;
    }
    out << "</svg>\n";
}

}  // namespace sovrisk
