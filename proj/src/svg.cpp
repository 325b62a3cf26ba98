#include "gasdsr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace gasdsr {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 600.0;
constexpr double kMargin = 70.0;

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Axis {
    double lo = 0.0, hi = 1.0;
    double to_px(double v, double px_lo, double px_hi) const {
        if (hi == lo) return 0.5 * (px_lo + px_hi);
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

void open_svg(std::ostringstream& out) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << fmt(kWidth) << " "
        << fmt(kHeight) << "\" width=\"" << fmt(kWidth) << "\" height=\"" << fmt(kHeight)
        << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << fmt(kWidth) << "\" height=\"" << fmt(kHeight)
        << "\" fill=\"white\"/>\n";
}

void draw_axes(std::ostringstream& out, const Axis& ax, const Axis& ay, const std::string& xlabel,
               const std::string& ylabel) {
    out << "<line x1=\"" << fmt(kMargin) << "\" y1=\"" << fmt(kHeight - kMargin) << "\" x2=\""
        << fmt(kWidth - kMargin) << "\" y2=\"" << fmt(kHeight - kMargin)
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << fmt(kMargin) << "\" y1=\"" << fmt(kMargin) << "\" x2=\""
        << fmt(kMargin) << "\" y2=\"" << fmt(kHeight - kMargin) << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double vx = ax.lo + (ax.hi - ax.lo) * k / 5.0;
        const double px = ax.to_px(vx, kMargin, kWidth - kMargin);
        out << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(kHeight - kMargin) << "\" x2=\""
            << fmt(px) << "\" y2=\"" << fmt(kHeight - kMargin + 6) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(kHeight - kMargin + 22)
            << "\" font-size=\"12\" text-anchor=\"middle\">" << fmt(vx) << "</text>\n";
        const double vy = ay.lo + (ay.hi - ay.lo) * k / 5.0;
        const double py = ay.to_px(vy, kHeight - kMargin, kMargin);
        out << "<line x1=\"" << fmt(kMargin - 6) << "\" y1=\"" << fmt(py) << "\" x2=\""
            << fmt(kMargin) << "\" y2=\"" << fmt(py) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt(kMargin - 10) << "\" y=\"" << fmt(py + 4)
            << "\" font-size=\"12\" text-anchor=\"end\">" << fmt(vy) << "</text>\n";
    }
    out << "<text x=\"" << fmt(kWidth / 2) << "\" y=\"" << fmt(kHeight - 20)
        << "\" font-size=\"14\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    out << "<text x=\"20\" y=\"" << fmt(kHeight / 2)
        << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
        << fmt(kHeight / 2) << ")\">" << ylabel << "</text>\n";
}

void legend_entry(std::ostringstream& out, int slot, const std::string& color,
                  const std::string& label, double opacity) {
    const double y = kMargin + 18.0 * slot;
    out << "<rect x=\"" << fmt(kWidth - kMargin - 150) << "\" y=\"" << fmt(y)
        << "\" width=\"14\" height=\"12\" fill=\"" << color << "\" fill-opacity=\""
        << fmt(opacity) << "\" stroke=\"" << color << "\"/>\n";
    out << "<text x=\"" << fmt(kWidth - kMargin - 130) << "\" y=\"" << fmt(y + 11)
        << "\" font-size=\"12\">" << label << "</text>\n";
}

void draw_rect_region(std::ostringstream& out, const DSRegion& region, const Axis& ax,
                      const Axis& ay, const std::string& color) {
    const double x0 = ax.to_px(region.nodes[0].lo, kMargin, kWidth - kMargin);
    const double x1 = ax.to_px(region.nodes[0].hi, kMargin, kWidth - kMargin);
    const double y0 = ay.to_px(region.nodes[1].lo, kHeight - kMargin, kMargin);
    const double y1 = ay.to_px(region.nodes[1].hi, kHeight - kMargin, kMargin);
    out << "<rect x=\"" << fmt(std::min(x0, x1)) << "\" y=\"" << fmt(std::min(y0, y1))
        << "\" width=\"" << fmt(std::abs(x1 - x0)) << "\" height=\"" << fmt(std::abs(y1 - y0))
        << "\" fill=\"" << color << "\" fill-opacity=\"0.25\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
}

void draw_raster(std::ostringstream& out, const RasterResult& raster, const Axis& ax,
                 const Axis& ay) {
    const double cw = (kWidth - 2 * kMargin) / raster.spec.res1;
    const double ch = (kHeight - 2 * kMargin) / raster.spec.res2;
    for (int j = 0; j < raster.spec.res2; ++j) {
        for (int i = 0; i < raster.spec.res1; ++i) {
            const int cell = raster.index(i, j);
            std::string color = raster.secure[cell] ? "#9ecf9e" : "#e8b0b0";
            if (raster.diverged[cell]) color = "#c0c0c0";
            const double px = ax.to_px(raster.w1_at(i), kMargin, kWidth - kMargin) - cw / 2;
            const double py = ay.to_px(raster.w2_at(j), kHeight - kMargin, kMargin) - ch / 2;
            out << "<rect x=\"" << fmt(px) << "\" y=\"" << fmt(py) << "\" width=\"" << fmt(cw)
                << "\" height=\"" << fmt(ch) << "\" fill=\"" << color << "\"/>\n";
        }
    }
}

std::string interval_bars(const DSRegion& region) {
    std::ostringstream out;
    open_svg(out);
    const int n = static_cast<int>(region.nodes.size());
    double lo = 0.0, hi = 1.0;
    if (n > 0) {
        lo = region.nodes[0].lo;
        hi = region.nodes[0].hi;
        for (const auto& iv : region.nodes) {
            lo = std::min(lo, iv.lo);
            hi = std::max(hi, iv.hi);
        }
    }
    const double pad = 0.05 * std::max(hi - lo, 1e-9);
    Axis ay{lo - pad, hi + pad};
    const double slot_w = (kWidth - 2 * kMargin) / std::max(1, n);
    out << "<line x1=\"" << fmt(kMargin) << "\" y1=\"" << fmt(kMargin) << "\" x2=\""
        << fmt(kMargin) << "\" y2=\"" << fmt(kHeight - kMargin) << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double vy = ay.lo + (ay.hi - ay.lo) * k / 5.0;
        const double py = ay.to_px(vy, kHeight - kMargin, kMargin);
        out << "<text x=\"" << fmt(kMargin - 10) << "\" y=\"" << fmt(py + 4)
            << "\" font-size=\"12\" text-anchor=\"end\">" << fmt(vy) << "</text>\n";
    }
    for (int k = 0; k < n; ++k) {
        const auto& iv = region.nodes[k];
        const double cx = kMargin + slot_w * (k + 0.5);
        const double y_lo = ay.to_px(iv.lo, kHeight - kMargin, kMargin);
        const double y_hi = ay.to_px(iv.hi, kHeight - kMargin, kMargin);
        out << "<rect x=\"" << fmt(cx - slot_w * 0.22) << "\" y=\"" << fmt(std::min(y_lo, y_hi))
            << "\" width=\"" << fmt(slot_w * 0.44) << "\" height=\"" << fmt(std::abs(y_lo - y_hi))
            << "\" fill=\"#4878a8\" fill-opacity=\"0.6\" stroke=\"#2f4f74\"/>\n";
        out << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(kHeight - kMargin + 22)
            << "\" font-size=\"12\" text-anchor=\"middle\">" << iv.id << "</text>\n";
    }
    out << "<text x=\"20\" y=\"" << fmt(kHeight / 2)
        << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
        << fmt(kHeight / 2) << ")\">withdrawal (kg/s)</text>\n";
    out << "<text x=\"" << fmt(kWidth / 2) << "\" y=\"" << fmt(kHeight - 20)
        << "\" font-size=\"14\" text-anchor=\"middle\">coupling node</text>\n";
    out << "</svg>\n";
    return out.str();
}

} // namespace

std::string render_region_svg(const DSRegion& region, const DSRegion* second,
                              const RasterResult* raster) {
    if (region.nodes.size() != 2) return interval_bars(region);

    Axis ax{region.nodes[0].lo, region.nodes[0].hi};
    Axis ay{region.nodes[1].lo, region.nodes[1].hi};
    if (second && second->nodes.size() == 2) {
        ax.lo = std::min(ax.lo, second->nodes[0].lo);
        ax.hi = std::max(ax.hi, second->nodes[0].hi);
        ay.lo = std::min(ay.lo, second->nodes[1].lo);
        ay.hi = std::max(ay.hi, second->nodes[1].hi);
    }
    if (raster) {
        ax.lo = std::min(ax.lo, raster->spec.w1_min);
        ax.hi = std::max(ax.hi, raster->spec.w1_max);
        ay.lo = std::min(ay.lo, raster->spec.w2_min);
        ay.hi = std::max(ay.hi, raster->spec.w2_max);
    }
    const double pad_x = 0.08 * std::max(ax.hi - ax.lo, 1e-9);
    const double pad_y = 0.08 * std::max(ay.hi - ay.lo, 1e-9);
    ax.lo -= pad_x;
    ax.hi += pad_x;
    ay.lo -= pad_y;
    ay.hi += pad_y;

    std::ostringstream out;
    open_svg(out);
    if (raster) draw_raster(out, *raster, ax, ay);
    draw_rect_region(out, region, ax, ay, region.mode == RegionMode::Dynamic ? "#2f6fb4" : "#b4662f");
    if (second && second->nodes.size() == 2) {
        draw_rect_region(out, *second, ax, ay,
                         second->mode == RegionMode::Dynamic ? "#2f6fb4" : "#b4662f");
    }
    draw_axes(out, ax, ay,
              "withdrawal at " + region.nodes[0].id + " (kg/s)",
              "withdrawal at " + region.nodes[1].id + " (kg/s)");
    int slot = 0;
    legend_entry(out, slot++, region.mode == RegionMode::Dynamic ? "#2f6fb4" : "#b4662f",
                 region.mode == RegionMode::Dynamic ? "dynamic region" : "steady region", 0.25);
    if (second) {
        legend_entry(out, slot++, second->mode == RegionMode::Dynamic ? "#2f6fb4" : "#b4662f",
                     second->mode == RegionMode::Dynamic ? "dynamic region" : "steady region",
                     0.25);
    }
    if (raster) {
        legend_entry(out, slot++, "#9ecf9e", "raster secure", 1.0);
        legend_entry(out, slot++, "#e8b0b0", "raster insecure", 1.0);
    }
    out << "</svg>\n";
    return out.str();
}

std::string render_raster_svg(const RasterResult& raster, const DSRegion* region) {
    Axis ax{raster.spec.w1_min, raster.spec.w1_max};
    Axis ay{raster.spec.w2_min, raster.spec.w2_max};
    const double pad_x = 0.08 * std::max(ax.hi - ax.lo, 1e-9);
    const double pad_y = 0.08 * std::max(ay.hi - ay.lo, 1e-9);
    ax.lo -= pad_x;
    ax.hi += pad_x;
    ay.lo -= pad_y;
    ay.hi += pad_y;

    std::ostringstream out;
    open_svg(out);
    draw_raster(out, raster, ax, ay);
    if (region && region->nodes.size() == 2) {
        draw_rect_region(out, *region, ax, ay,
                         region->mode == RegionMode::Dynamic ? "#2f6fb4" : "#b4662f");
        // Boundary points along the participation ray.
        const double bx0 = ax.to_px(region->nodes[0].lo, kMargin, kWidth - kMargin);
        const double by0 = ay.to_px(region->nodes[1].lo, kHeight - kMargin, kMargin);
        const double bx1 = ax.to_px(region->nodes[0].hi, kMargin, kWidth - kMargin);
        const double by1 = ay.to_px(region->nodes[1].hi, kHeight - kMargin, kMargin);
        out << "<circle cx=\"" << fmt(bx0) << "\" cy=\"" << fmt(by0)
            << "\" r=\"5\" fill=\"#1f3f64\"/>\n";
        out << "<circle cx=\"" << fmt(bx1) << "\" cy=\"" << fmt(by1)
            << "\" r=\"5\" fill=\"#1f3f64\"/>\n";
    }
    draw_axes(out, ax, ay, raster.spec.axis1 + " withdrawal (kg/s)",
              raster.spec.axis2 + " withdrawal (kg/s)");
    legend_entry(out, 0, "#9ecf9e", "secure", 1.0);
    legend_entry(out, 1, "#e8b0b0", "insecure", 1.0);
    legend_entry(out, 2, "#c0c0c0", "diverged", 1.0);
    out << "</svg>\n";
    return out.str();
}

} // namespace gasdsr
