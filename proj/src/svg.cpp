#include "modr/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace modr {

namespace {

constexpr double width = 720.0, height = 480.0;
constexpr double margin_l = 72.0, margin_r = 24.0, margin_t = 24.0, margin_b = 56.0;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string axis_label(const Axis& ax) {
    return ax.unit.empty() ? ax.name : ax.name + " (" + ax.unit + ")";
}

struct Range {
    double lo = 0.0, hi = 1.0;
    double map(double v, double a, double b) const {
        if (hi == lo)
            return 0.5 * (a + b);
        return a + (v - lo) / (hi - lo) * (b - a);
    }
};

Range range_of(const std::vector<double>& v) {
    Range r{v.front(), v.front()};
    for (double x : v) {
        r.lo = std::min(r.lo, x);
        r.hi = std::max(r.hi, x);
    }
    if (r.lo == r.hi) {
        r.lo -= 0.5;
        r.hi += 0.5;
    }
    return r;
}

// Monotone-luminance colormap (viridis anchor points).
constexpr std::array<std::array<double, 3>, 9> viridis{{{0.267004, 0.004874, 0.329415},
                                                        {0.282623, 0.140926, 0.457517},
                                                        {0.253935, 0.265254, 0.529983},
                                                        {0.206756, 0.371758, 0.553117},
                                                        {0.163625, 0.471133, 0.558148},
                                                        {0.127568, 0.566949, 0.550556},
                                                        {0.134692, 0.658636, 0.517649},
                                                        {0.477504, 0.821444, 0.318195},
                                                        {0.993248, 0.906157, 0.143936}}};

std::string color_of(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const double pos = t * (viridis.size() - 1);
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(pos),
                                                viridis.size() - 2);
    const double f = pos - static_cast<double>(i);
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                  static_cast<int>(std::lround(255.0 * (viridis[i][0] * (1 - f) +
                                                        viridis[i + 1][0] * f))),
                  static_cast<int>(std::lround(255.0 * (viridis[i][1] * (1 - f) +
                                                        viridis[i + 1][1] * f))),
                  static_cast<int>(std::lround(255.0 * (viridis[i][2] * (1 - f) +
                                                        viridis[i + 1][2] * f))));
    return buf;
}

constexpr std::array<const char*, 6> series_colors{"#1f77b4", "#d62728", "#2ca02c",
                                                   "#9467bd", "#ff7f0e", "#8c564b"};

void open_svg(std::string& s) {
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         fmt(width) + "\" height=\"" + fmt(height) + "\" viewBox=\"0 0 " + fmt(width) +
         " " + fmt(height) + "\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
         "\" fill=\"white\"/>\n";
}

void draw_frame_and_ticks(std::string& s, const Range& xr, const Range& yr,
                          const std::string& xlabel, const std::string& ylabel) {
    const double x0 = margin_l, x1 = width - margin_r;
    const double y0 = height - margin_b, y1 = margin_t;
    s += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y1) + "\" width=\"" + fmt(x1 - x0) +
         "\" height=\"" + fmt(y0 - y1) +
         "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double tx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
        const double px = xr.map(tx, x0, x1);
        s += "<line x1=\"" + fmt(px) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(px) +
             "\" y2=\"" + fmt(y0 + 5) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        s += "<text x=\"" + fmt(px) + "\" y=\"" + fmt(y0 + 18) +
             "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
             fmt(tx) + "</text>\n";
        const double ty = yr.lo + (yr.hi - yr.lo) * i / 4.0;
        const double py = yr.map(ty, y0, y1);
        s += "<line x1=\"" + fmt(x0 - 5) + "\" y1=\"" + fmt(py) + "\" x2=\"" + fmt(x0) +
             "\" y2=\"" + fmt(py) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        s += "<text x=\"" + fmt(x0 - 8) + "\" y=\"" + fmt(py + 4) +
             "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
             fmt(ty) + "</text>\n";
    }
    s += "<text x=\"" + fmt(0.5 * (x0 + x1)) + "\" y=\"" + fmt(height - 14) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" +
         xlabel + "</text>\n";
    s += "<text x=\"16\" y=\"" + fmt(0.5 * (y0 + y1)) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 16 " +
         fmt(0.5 * (y0 + y1)) + ")\">" + ylabel + "</text>\n";
}

std::string line_svg(const ScanResult& scan) {
    const auto& x = scan.axis1.values;
    Range xr = range_of(x);
    Range yr = range_of(scan.values[0]);
    for (const auto& col : scan.values) {
        const Range r = range_of(col);
        yr.lo = std::min(yr.lo, r.lo);
        yr.hi = std::max(yr.hi, r.hi);
    }
    std::string ylabel = scan.value_names[0];
    if (!scan.value_units[0].empty())
        ylabel += " (" + scan.value_units[0] + ")";

    std::string s;
    open_svg(s);
    draw_frame_and_ticks(s, xr, yr, axis_label(scan.axis1), ylabel);
    const double x0 = margin_l, x1 = width - margin_r;
    const double y0 = height - margin_b, y1 = margin_t;
    for (std::size_t c = 0; c < scan.values.size(); ++c) {
        s += "<polyline fill=\"none\" stroke=\"";
        s += series_colors[c % series_colors.size()];
        s += "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (i)
                s += ' ';
            s += fmt(xr.map(x[i], x0, x1)) + "," + fmt(yr.map(scan.values[c][i], y0, y1));
        }
        s += "\"/>\n";
    }
    s += "</svg>\n";
    return s;
}

std::string heatmap_svg(const ScanResult& scan) {
    const auto& xs = scan.axis1.values;
    const auto& ys = scan.axis2->values;
    const auto& val = scan.values[0];
    Range xr = range_of(xs), yr = range_of(ys), vr = range_of(val);

    std::string s;
    open_svg(s);
    const double x0 = margin_l, x1 = width - margin_r;
    const double y0 = height - margin_b, y1 = margin_t;
    const double cell_w = (x1 - x0) / static_cast<double>(xs.size());
    const double cell_h = (y0 - y1) / static_cast<double>(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < ys.size(); ++j) {
            const double v = val[i * ys.size() + j];
            const double t = (vr.hi == vr.lo) ? 0.5 : (v - vr.lo) / (vr.hi - vr.lo);
            const double px = x0 + cell_w * static_cast<double>(i);
            const double py = y0 - cell_h * static_cast<double>(j + 1);
            s += "<rect x=\"" + fmt(px) + "\" y=\"" + fmt(py) + "\" width=\"" +
                 fmt(cell_w + 0.5) + "\" height=\"" + fmt(cell_h + 0.5) + "\" fill=\"" +
                 color_of(t) + "\"/>\n";
        }
    }
    draw_frame_and_ticks(s, xr, yr, axis_label(scan.axis1), axis_label(*scan.axis2));
    std::string title = scan.value_names[0];
    if (!scan.value_units[0].empty())
        title += " (" + scan.value_units[0] + ")";
    s += "<text x=\"" + fmt(width - margin_r) + "\" y=\"" + fmt(margin_t - 8) +
         "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" + title +
         "</text>\n";
    s += "</svg>\n";
    return s;
}

} // namespace

std::string emit_svg(const ScanResult& scan, PlotStyle style) {
    scan.validate();
    if (scan.values.empty() || scan.axis1.values.empty())
        throw std::invalid_argument("emit_svg: empty scan");
    if (style == PlotStyle::Heatmap) {
        if (!scan.axis2)
            throw std::invalid_argument("heatmap requires 2-D data");
        return heatmap_svg(scan);
    }
    if (scan.axis2)
        throw std::invalid_argument("line plot requires 1-D data");
    return line_svg(scan);
}

} // namespace modr
