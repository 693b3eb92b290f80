#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cfmd {

struct Series {
    std::string label;
    std::vector<double> x, y;
};

// Line chart as a standalone SVG document.
std::string render_svg_plot(const std::vector<Series> &series, const std::string &title, const std::string &x_label);

// Reads a metrics log (one JSON object per line) and returns one series per key, with
// `x_key` as abscissa.
std::vector<Series> read_metric_series(const std::filesystem::path &log, const std::vector<std::string> &keys,
                                       const std::string &x_key = "step");

} // namespace cfmd
