#pragma once

// Minimal single-series SVG line chart.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace metasim {

struct PlotStyle {
    double width = 800.0;
    double height = 400.0;
    double margin_left = 80.0;
    double margin_right = 20.0;
    double margin_top = 40.0;
    double margin_bottom = 50.0;
    bool log_y = false;
    std::string color = "#1f77b4";
};

namespace detail {

inline std::string fmt_tick(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline std::string xml_escape(const std::string& s)
{
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

} // namespace detail

/// Writes y(x) as a polyline with axes and five ticks per axis. With a log
/// y-axis, nonpositive samples break the line.
inline void write_line_plot(std::ostream& os, std::span<const double> x, std::span<const double> y,
                            const std::string& title, const std::string& y_label, const PlotStyle& style = {})
{
    const double plot_w = style.width - style.margin_left - style.margin_right;
    const double plot_h = style.height - style.margin_top - style.margin_bottom;

    auto transform = [&](double v) { return style.log_y ? std::log10(v) : v; };
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (style.log_y && !(y[i] > 0.0)) {
            continue;
        }
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            continue;
        }
        x_lo = std::min(x_lo, x[i]);
        x_hi = std::max(x_hi, x[i]);
        y_lo = std::min(y_lo, transform(y[i]));
        y_hi = std::max(y_hi, transform(y[i]));
    }
    if (!(x_lo <= x_hi)) {
        x_lo = 0.0;
        x_hi = 1.0;
        y_lo = 0.0;
        y_hi = 1.0;
    }
    if (x_hi == x_lo) x_hi = x_lo + 1.0;
    if (y_hi == y_lo) {
        y_hi += 0.5;
        y_lo -= 0.5;
    }
    auto px = [&](double v) { return style.margin_left + (v - x_lo) / (x_hi - x_lo) * plot_w; };
    auto py = [&](double v) { return style.margin_top + (1.0 - (v - y_lo) / (y_hi - y_lo)) * plot_h; };

    char buf[128];
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\"" << style.height
       << "\" viewBox=\"0 0 " << style.width << ' ' << style.height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << style.width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       << "font-size=\"16\">" << detail::xml_escape(title) << "</text>\n";
    os << "<g stroke=\"black\" stroke-width=\"1\">\n";
    os << "<line x1=\"" << style.margin_left << "\" y1=\"" << style.margin_top + plot_h << "\" x2=\""
       << style.margin_left + plot_w << "\" y2=\"" << style.margin_top + plot_h << "\"/>\n";
    os << "<line x1=\"" << style.margin_left << "\" y1=\"" << style.margin_top << "\" x2=\"" << style.margin_left
       << "\" y2=\"" << style.margin_top + plot_h << "\"/>\n";
    os << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x_lo + (x_hi - x_lo) * i / 4.0;
        const double yv = y_lo + (y_hi - y_lo) * i / 4.0;
        std::snprintf(buf, sizeof buf, "%.1f", px(xv));
        os << "<text x=\"" << buf << "\" y=\"" << style.margin_top + plot_h + 16
           << "\" text-anchor=\"middle\">" << detail::fmt_tick(xv) << "</text>\n";
        std::snprintf(buf, sizeof buf, "%.1f", py(yv));
        os << "<text x=\"" << style.margin_left - 6 << "\" y=\"" << buf << "\" text-anchor=\"end\">"
           << (style.log_y ? "1e" + detail::fmt_tick(yv) : detail::fmt_tick(yv)) << "</text>\n";
    }
    os << "<text x=\"" << style.margin_left + plot_w / 2 << "\" y=\"" << style.height - 10
       << "\" text-anchor=\"middle\">t</text>\n";
    os << "<text x=\"16\" y=\"" << style.margin_top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << style.margin_top + plot_h / 2 << ")\">" << detail::xml_escape(y_label) << (style.log_y ? " (log)" : "")
       << "</text>\n</g>\n";

    bool open = false;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        const bool usable = std::isfinite(x[i]) && std::isfinite(y[i]) && (!style.log_y || y[i] > 0.0);
        if (!usable) {
            if (open) {
                os << "\"/>\n";
                open = false;
            }
            continue;
        }
        if (!open) {
            os << "<polyline fill=\"none\" stroke=\"" << style.color << "\" stroke-width=\"1.5\" points=\"";
            open = true;
        }
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x[i]), py(transform(y[i])));
        os << buf;
    }
    if (open) {
        os << "\"/>\n";
    }
    os << "</svg>\n";
}

} // namespace metasim
