#include "drkm/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

#include "drkm/error.hpp"

namespace drkm {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string scatter_svg(const std::vector<ScatterSeries>& series, const std::string& title, int width, int height) {
    double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    double hi[2] = {-lo[0], -lo[1]};
    for (const auto& s : series) {
        if (s.points.rows() > 0 && s.points.cols() != 2) throw InvalidArgument("scatter_svg needs 2-D points");
        for (std::size_t i = 0; i < s.points.rows(); ++i)
            for (int d = 0; d < 2; ++d) {
                lo[d] = std::min(lo[d], s.points(i, d));
                hi[d] = std::max(hi[d], s.points(i, d));
            }
    }
    if (!(lo[0] <= hi[0])) lo[0] = lo[1] = -1.0, hi[0] = hi[1] = 1.0;
    const double margin = 40.0, top = 50.0;
    const double span = std::max({hi[0] - lo[0], hi[1] - lo[1], 1e-12});
    const double scale = std::min(width - 2 * margin, height - top - margin) / span;
    const double cx = 0.5 * (lo[0] + hi[0]), cy = 0.5 * (lo[1] + hi[1]);
    const double ox = 0.5 * width, oy = top + 0.5 * (height - top - margin);

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                      std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " +
                      std::to_string(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(0.5 * width) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">" + escape(title) + "</text>\n";
    const double fx0 = ox - 0.5 * span * scale, fy0 = oy - 0.5 * span * scale;
    svg += "<rect x=\"" + fmt(fx0) + "\" y=\"" + fmt(fy0) + "\" width=\"" + fmt(span * scale) + "\" height=\"" +
           fmt(span * scale) + "\" fill=\"none\" stroke=\"#999\"/>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        svg += "<g fill=\"" + escape(s.color) + "\" fill-opacity=\"" + fmt(s.opacity) + "\">\n";
        for (std::size_t i = 0; i < s.points.rows(); ++i) {
            const double px = ox + (s.points(i, 0) - cx) * scale;
            const double py = oy - (s.points(i, 1) - cy) * scale;
            svg += "<circle cx=\"" + fmt(px) + "\" cy=\"" + fmt(py) + "\" r=\"" + fmt(s.radius) + "\"/>\n";
        }
        svg += "</g>\n";
        const double ly = 40.0 + 16.0 * k;
        svg += "<circle cx=\"" + fmt(width - 150.0) + "\" cy=\"" + fmt(ly - 4) + "\" r=\"4\" fill=\"" +
               escape(s.color) + "\"/>\n";
        svg += "<text x=\"" + fmt(width - 140.0) + "\" y=\"" + fmt(ly) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + escape(s.label) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace drkm
