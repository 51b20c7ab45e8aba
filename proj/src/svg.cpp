#include "duplex/svg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "duplex/errors.hpp"

namespace duplex {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 420.0;
constexpr double kMarginLeft = 64.0;
constexpr double kMarginRight = 160.0;  // legend gutter
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 52.0;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
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

// Round tick step to 1/2/5 decades covering the range with ~6 ticks.
std::vector<double> nice_ticks(double lo, double hi) {
    const double span = hi - lo;
    if (span <= 0.0) return {lo};
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag) {
            step = m * mag;
            break;
        }
    }
    std::vector<double> ticks;
    const double first = std::ceil(lo / step) * step;
    for (double v = first; v <= hi + 1e-12 * span; v += step) {
        const double snapped = std::abs(v) < step * 1e-9 ? 0.0 : v;
        ticks.push_back(snapped);
    }
    return ticks;
}

}  // namespace

const std::vector<std::string>& chart_palette() {
    static const std::vector<std::string> palette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    return palette;
}

SvgChart::SvgChart(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgChart::add_series(Series series) { series_.push_back(std::move(series)); }

void SvgChart::set_y_range(double lo, double hi) { y_range_ = {lo, hi}; }

std::string SvgChart::render(bool deterministic) const {
    double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
    bool have_point = false;
    for (const Series& s : series_) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (std::isnan(s.y[i])) continue;
            if (!have_point) {
                x_lo = x_hi = s.x[i];
                y_lo = y_hi = s.y[i];
                have_point = true;
            }
            x_lo = std::min(x_lo, s.x[i]);
            x_hi = std::max(x_hi, s.x[i]);
            y_lo = std::min(y_lo, s.y[i]);
            y_hi = std::max(y_hi, s.y[i]);
            if (!s.band_lo.empty()) {
                if (!std::isnan(s.band_lo[i])) y_lo = std::min(y_lo, s.band_lo[i]);
                if (!std::isnan(s.band_hi[i])) y_hi = std::max(y_hi, s.band_hi[i]);
            }
        }
    }
    if (y_range_) {
        y_lo = y_range_->first;
        y_hi = y_range_->second;
    } else {
        const double pad = (y_hi - y_lo) * 0.05 + 1e-9;
        y_lo -= pad;
        y_hi += pad;
    }
    if (x_hi == x_lo) x_hi = x_lo + 1.0;
    if (y_hi == y_lo) y_hi = y_lo + 1.0;

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    const auto sx = [&](double v) { return kMarginLeft + (v - x_lo) / (x_hi - x_lo) * plot_w; };
    const auto sy = [&](double v) { return kMarginTop + (y_hi - v) / (y_hi - y_lo) * plot_h; };

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    if (!deterministic) {
        const auto now = std::chrono::system_clock::now();
        out << "<!-- generated "
            << std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count()
            << " -->\n";
    }
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";

    // Gridlines and ticks.
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (double tick : nice_ticks(y_lo, y_hi)) {
        const double y = sy(tick);
        out << "<line x1=\"" << fmt(kMarginLeft) << "\" y1=\"" << fmt(y) << "\" x2=\""
            << fmt(kMarginLeft + plot_w) << "\" y2=\"" << fmt(y)
            << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << fmt(kMarginLeft - 8) << "\" y=\"" << fmt(y + 4)
            << "\" text-anchor=\"end\">" << fmt_tick(tick) << "</text>\n";
    }
    for (double tick : nice_ticks(x_lo, x_hi)) {
        const double x = sx(tick);
        out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(kMarginTop) << "\" x2=\"" << fmt(x)
            << "\" y2=\"" << fmt(kMarginTop + plot_h)
            << "\" stroke=\"#eee\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(kMarginTop + plot_h + 18)
            << "\" text-anchor=\"middle\">" << fmt_tick(tick) << "</text>\n";
    }
    out << "</g>\n";

    // CI bands under the lines.
    for (const Series& s : series_) {
        if (s.band_lo.empty()) continue;
        std::vector<std::pair<double, double>> upper, lower;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (std::isnan(s.band_lo[i]) || std::isnan(s.band_hi[i])) continue;
            upper.emplace_back(s.x[i], s.band_hi[i]);
            lower.emplace_back(s.x[i], s.band_lo[i]);
        }
        if (upper.empty()) continue;
        out << "<polygon fill=\"" << s.color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
        for (const auto& [x, y] : upper) out << fmt(sx(x)) << "," << fmt(sy(y)) << " ";
        for (auto it = lower.rbegin(); it != lower.rend(); ++it)
            out << fmt(sx(it->first)) << "," << fmt(sy(it->second)) << " ";
        out << "\"/>\n";
    }

    // Lines.
    for (const Series& s : series_) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\"";
        if (s.dashed) out << " stroke-dasharray=\"6,4\"";
        out << " points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (std::isnan(s.y[i])) continue;  // gaps render as breaks
            out << fmt(sx(s.x[i])) << "," << fmt(sy(s.y[i])) << " ";
        }
        out << "\"/>\n";
    }

    // Frame, labels, title.
    out << "<rect x=\"" << fmt(kMarginLeft) << "\" y=\"" << fmt(kMarginTop) << "\" width=\""
        << fmt(plot_w) << "\" height=\"" << fmt(plot_h)
        << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    out << "<g font-family=\"sans-serif\" fill=\"#111\">\n";
    out << "<text x=\"" << fmt(kMarginLeft + plot_w / 2) << "\" y=\"22\" font-size=\"15\" "
        << "text-anchor=\"middle\">" << escape_xml(title_) << "</text>\n";
    out << "<text x=\"" << fmt(kMarginLeft + plot_w / 2) << "\" y=\"" << fmt(kHeight - 12)
        << "\" font-size=\"12\" text-anchor=\"middle\">" << escape_xml(x_label_) << "</text>\n";
    out << "<text x=\"18\" y=\"" << fmt(kMarginTop + plot_h / 2)
        << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << fmt(kMarginTop + plot_h / 2) << ")\">" << escape_xml(y_label_) << "</text>\n";
    out << "</g>\n";

    // Legend.
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#111\">\n";
    double legend_y = kMarginTop + 10.0;
    const double legend_x = kMarginLeft + plot_w + 14.0;
    for (const Series& s : series_) {
        out << "<line x1=\"" << fmt(legend_x) << "\" y1=\"" << fmt(legend_y - 4) << "\" x2=\""
            << fmt(legend_x + 22) << "\" y2=\"" << fmt(legend_y - 4) << "\" stroke=\"" << s.color
            << "\" stroke-width=\"2\"";
        if (s.dashed) out << " stroke-dasharray=\"6,4\"";
        out << "/>\n";
        out << "<text x=\"" << fmt(legend_x + 28) << "\" y=\"" << fmt(legend_y) << "\">"
            << escape_xml(s.label) << "</text>\n";
        legend_y += 16.0;
    }
    out << "</g>\n";
    out << "</svg>\n";
    return out.str();
}

void SvgChart::write(const std::filesystem::path& path, bool deterministic) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << render(deterministic);
    if (!out) throw DataError("short write: " + path.string());
}

}  // namespace duplex
