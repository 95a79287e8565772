#pragma once

#include <string>
#include <vector>

#include "drkm/matrix.hpp"

namespace drkm {

struct ScatterSeries {
    std::string label;
    std::string color;  ///< any SVG colour, e.g. "#1f77b4"
    Matrix points;      ///< N x 2
    double radius = 1.5;
    double opacity = 0.8;
};

/// Scatter plot of 2-D point sets drawn in order, with a shared equal-aspect
/// frame and a legend. The output depends only on the inputs.
std::string scatter_svg(const std::vector<ScatterSeries>& series, const std::string& title, int width = 640,
                        int height = 640);

}  // namespace drkm
