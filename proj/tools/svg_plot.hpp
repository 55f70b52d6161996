#pragma once

// Minimal SVG line-plot writer for the CLI's curve outputs (no external
// plotting dependency).

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

namespace ldfv_cli {

struct Series {
    std::string label;
    std::string color = "#1f6fb2";
    std::vector<double> x, y;
};

inline void write_svg_plot(const std::string& path, const std::vector<Series>& series,
                           const std::string& title, const std::string& xlabel,
                           const std::string& ylabel) {
    const int W = 720, H = 480, ML = 70, MR = 20, MT = 40, MB = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmax > xmin)) xmax = xmin + 1;
    if (!(ymax > ymin)) ymax = ymin + 1;
    const double yr = ymax - ymin;
    ymin -= 0.05 * yr;
    ymax += 0.05 * yr;

    auto px = [&](double x) { return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR); };
    auto py = [&](double y) { return H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB); };

    std::ofstream os(path);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
       << "</text>\n";
    os << "<text x='" << W / 2 << "' y='" << H - 12 << "' text-anchor='middle' font-size='13'>"
       << xlabel << "</text>\n";
    os << "<text x='16' y='" << H / 2 << "' text-anchor='middle' font-size='13' transform='rotate(-90 16 "
       << H / 2 << ")'>" << ylabel << "</text>\n";
    os << "<rect x='" << ML << "' y='" << MT << "' width='" << W - ML - MR << "' height='"
       << H - MT - MB << "' fill='none' stroke='black'/>\n";
    // axis ticks
    for (int k = 0; k <= 4; ++k) {
        const double xv = xmin + k * (xmax - xmin) / 4;
        const double yv = ymin + k * (ymax - ymin) / 4;
        os << "<text x='" << px(xv) << "' y='" << H - MB + 16
           << "' text-anchor='middle' font-size='11'>" << xv << "</text>\n";
        os << "<text x='" << ML - 6 << "' y='" << py(yv) + 4
           << "' text-anchor='end' font-size='11'>" << yv << "</text>\n";
    }
    int li = 0;
    for (const auto& s : series) {
        os << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
        for (size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << "," << py(s.y[i]) << " ";
        os << "'/>\n";
        os << "<text x='" << W - MR - 8 << "' y='" << MT + 18 + 16 * li
           << "' text-anchor='end' font-size='12' fill='" << s.color << "'>" << s.label
           << "</text>\n";
        ++li;
    }
    os << "</svg>\n";
}

}  // namespace ldfv_cli
