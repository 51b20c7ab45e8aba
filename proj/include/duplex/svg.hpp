#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace duplex {

// Line chart emitted as plain SVG 1.1: axes, tick labels, polylines, CI band
// polygons, legend. No plotting framework.
class SvgChart {
public:
    struct Series {
        std::string label;
        std::string color;
        bool dashed = false;
        std::vector<double> x;
        std::vector<double> y;
        std::vector<double> band_lo;  // optional CI band, same length as x
        std::vector<double> band_hi;
    };

    SvgChart(std::string title, std::string x_label, std::string y_label);

    void add_series(Series series);
    void set_y_range(double lo, double hi);

    // Timestamp comment is omitted when deterministic is set.
    void write(const std::filesystem::path& path, bool deterministic) const;
    std::string render(bool deterministic) const;

private:
    std::string title_;
    std::string x_label_;
    std::string y_label_;
    std::vector<Series> series_;
    std::optional<std::pair<double, double>> y_range_;
};

// Color cycle shared by all charts.
const std::vector<std::string>& chart_palette();

}  // namespace duplex
