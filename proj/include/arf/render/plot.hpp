#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arf/core/error.hpp"
#include "arf/core/io.hpp"
#include "arf/core/time.hpp"
#include "arf/question.hpp"
#include "arf/render/font.hpp"
#include "arf/render/png.hpp"
#include "arf/time_series.hpp"

namespace arf::render {

// Bumped whenever output bytes change for identical inputs.
inline constexpr std::string_view kRendererVersion = "arf-raster-1";

inline constexpr std::array<Rgb, 10> kTab10{{{0x1f, 0x77, 0xb4}, {0xff, 0x7f, 0x0e}, {0x2c, 0xa0, 0x2c},
                                             {0xd6, 0x27, 0x28}, {0x94, 0x67, 0xbd}, {0x8c, 0x56, 0x4b},
                                             {0xe3, 0x77, 0xc2}, {0x7f, 0x7f, 0x7f}, {0xbc, 0xbd, 0x22},
                                             {0x17, 0xbe, 0xcf}}};
inline constexpr Rgb kBlue = kTab10[0];
inline constexpr Rgb kOrange = kTab10[1];
inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};
inline constexpr Rgb kGrid{0xe0, 0xe0, 0xe0};
inline constexpr Rgb kAxisText{0x33, 0x33, 0x33};

enum class PaletteMode { Normal, Monochrome };

struct PlotSpec {
    int dpi = 100;
    int max_side_px = 1500;
    double width_in = 18.0;
    double height_in = 6.0;
    Category category = Category::Presence;  // drives the legend rule
    PaletteMode palette = PaletteMode::Normal;
    Rgb mono_color = kBlue;
};

// Channel names are drawn for Identification questions or when there are
// fewer than 8 channels.
inline bool legend_for(Category category, std::size_t channels) {
    return category == Category::Identification || channels < 8;
}

inline bool legend_for(const PlotSpec& spec, const TimeSeries& s) { return legend_for(spec.category, s.channels); }

struct PixelSize {
    int width = 0;
    int height = 0;
};

// Figure size at spec.dpi, scaled down uniformly to fit max_side_px.
inline PixelSize figure_pixels(double width_in, double height_in, const PlotSpec& spec) {
    double w = width_in * spec.dpi;
    double h = height_in * spec.dpi;
    const double scale = std::min(1.0, static_cast<double>(spec.max_side_px) / std::max(w, h));
    return {std::max(1, static_cast<int>(std::floor(w * scale + 1e-9))),
            std::max(1, static_cast<int>(std::floor(h * scale + 1e-9)))};
}

// Min-max decimation: keeps at most 2 points per bucket, in index order,
// with at most max_points points overall. Missing values are skipped.
inline std::vector<std::size_t> decimate_minmax(const std::vector<double>& v, std::size_t max_points) {
    std::vector<std::size_t> out;
    if (v.size() <= max_points) {
        for (std::size_t i = 0; i < v.size(); ++i)
            if (!is_missing(v[i])) out.push_back(i);
        return out;
    }
    const std::size_t buckets = std::max<std::size_t>(1, max_points / 2);
    for (std::size_t b = 0; b < buckets; ++b) {
        const std::size_t lo = b * v.size() / buckets;
        const std::size_t hi = (b + 1) * v.size() / buckets;
        std::optional<std::size_t> imin, imax;
        for (std::size_t i = lo; i < hi; ++i) {
            if (is_missing(v[i])) continue;
            if (!imin || v[i] < v[*imin]) imin = i;
            if (!imax || v[i] > v[*imax]) imax = i;
        }
        if (!imin) continue;
        if (*imin == *imax) {
            out.push_back(*imin);
        } else {
            out.push_back(std::min(*imin, *imax));
            out.push_back(std::max(*imin, *imax));
        }
    }
    return out;
}

namespace detail {

inline void draw_text(Image& img, int x, int y, std::string_view text, Rgb color, int scale = 1) {
    for (char ch : text) {
        const std::uint8_t* g = glyph(ch);
        for (int col = 0; col < kGlyphWidth; ++col)
            for (int row = 0; row < kGlyphHeight; ++row)
                if (g[col] & (1u << row))
                    for (int dy = 0; dy < scale; ++dy)
                        for (int dx = 0; dx < scale; ++dx) img.set(x + col * scale + dx, y + row * scale + dy, color);
        x += kGlyphAdvance * scale;
    }
}

inline int text_width(std::string_view text, int scale = 1) { return static_cast<int>(text.size()) * kGlyphAdvance * scale; }

inline void fill_rect(Image& img, int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = std::max(0, y0); y <= std::min(img.height - 1, y1); ++y)
        for (int x = std::max(0, x0); x <= std::min(img.width - 1, x1); ++x) img.set(x, y, c);
}

inline void hline(Image& img, int x0, int x1, int y, Rgb c) { fill_rect(img, x0, y, x1, y, c); }
inline void vline(Image& img, int x, int y0, int y1, Rgb c) { fill_rect(img, x, y0, x, y1, c); }

// Bresenham with a 2-pixel pen, clipped to [clip_x0, clip_x1] x [clip_y0, clip_y1].
inline void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb c, int cx0, int cy0, int cx1, int cy1) {
    auto plot = [&](int x, int y) {
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                const int px = x + dx, py = y + dy;
                if (px >= cx0 && px <= cx1 && py >= cy0 && py <= cy1) img.set(px, py, c);
            }
    };
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        plot(x0, y0);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

struct Panel {
    int x0, y0, x1, y1;  // plot area, inclusive
    UnixSeconds t_lo, t_hi;
    double v_lo, v_hi;

    int px(UnixSeconds t) const {
        const double f = t_hi == t_lo ? 0.5 : static_cast<double>(t - t_lo) / static_cast<double>(t_hi - t_lo);
        return x0 + static_cast<int>(std::lround(f * (x1 - x0)));
    }
    int py(double v) const {
        const double f = v_hi == v_lo ? 0.5 : (v - v_lo) / (v_hi - v_lo);
        return y1 - static_cast<int>(std::lround(f * (y1 - y0)));
    }
};

inline std::pair<double, double> value_range(const std::vector<const TimeSeries*>& series) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto* s : series)
        for (double v : s->values)
            if (!is_missing(v) && std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
    if (!std::isfinite(lo)) return {0.0, 1.0};
    if (lo == hi) return {lo - 1.0, hi + 1.0};
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

inline void draw_axes(Image& img, const Panel& p, int text_scale, bool x_labels) {
    constexpr int kXTicks = 6;
    constexpr int kYTicks = 5;
    for (int i = 0; i <= kYTicks; ++i) {
        const double v = p.v_lo + (p.v_hi - p.v_lo) * i / kYTicks;
        const int y = p.py(v);
        hline(img, p.x0, p.x1, y, kGrid);
        hline(img, p.x0 - 5, p.x0 - 1, y, kAxisText);
        const std::string label = io::format_compact(v, 4);
        draw_text(img, p.x0 - 8 - text_width(label, text_scale), y - 4 * text_scale, label, kAxisText, text_scale);
    }
    for (int i = 0; i <= kXTicks; ++i) {
        const UnixSeconds t = p.t_lo + (p.t_hi - p.t_lo) * i / kXTicks;
        const int x = p.px(t);
        vline(img, x, p.y0, p.y1, kGrid);
        vline(img, x, p.y1 + 1, p.y1 + 5, kAxisText);
        if (x_labels) {
            const std::string label = format_axis_time(t);
            int lx = x - text_width(label, text_scale) / 2;
            lx = std::clamp(lx, 0, img.width - text_width(label, text_scale));
            draw_text(img, lx, p.y1 + 9, label, kAxisText, text_scale);
        }
    }
    hline(img, p.x0, p.x1, p.y0, kBlack);
    hline(img, p.x0, p.x1, p.y1, kBlack);
    vline(img, p.x0, p.y0, p.y1, kBlack);
    vline(img, p.x1, p.y0, p.y1, kBlack);
}

inline void draw_series(Image& img, const Panel& p, const TimeSeries& s, const PlotSpec& spec) {
    const auto max_points = static_cast<std::size_t>(4 * (p.x1 - p.x0 + 1));
    for (std::size_t c = 0; c < s.channels; ++c) {
        const Rgb color = spec.palette == PaletteMode::Monochrome ? spec.mono_color : kTab10[c % kTab10.size()];
        const auto values = s.channel(c);
        const auto idx = decimate_minmax(values, max_points);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const int x = p.px(s.time_at(idx[k]));
            const int y = p.py(values[idx[k]]);
            // A gap in the data (missing samples) breaks the line.
            const bool connect = k > 0 && [&] {
                for (std::size_t i = idx[k - 1] + 1; i < idx[k]; ++i)
                    if (is_missing(values[i])) return false;
                return true;
            }();
            if (connect)
                draw_line(img, p.px(s.time_at(idx[k - 1])), p.py(values[idx[k - 1]]), x, y, color, p.x0, p.y0, p.x1, p.y1);
            else
                draw_line(img, x, y, x, y, color, p.x0, p.y0, p.x1, p.y1);
        }
    }
}

inline void draw_legend(Image& img, const Panel& p, const TimeSeries& s, const PlotSpec& spec, int text_scale) {
    const int row_h = 10 * text_scale;
    const int max_rows = std::max(1, (p.y1 - p.y0 - 10) / row_h);
    std::size_t shown = s.channels;
    bool overflow = false;
    if (shown > static_cast<std::size_t>(max_rows)) {
        shown = static_cast<std::size_t>(max_rows - 1);
        overflow = true;
    }
    int width = 0;
    for (std::size_t c = 0; c < shown; ++c) width = std::max(width, text_width(s.channel_names[c], text_scale));
    const std::string more = overflow ? "+" + std::to_string(s.channels - shown) + " more" : "";
    width = std::max(width, text_width(more, text_scale));
    const int box_w = width + 30 * text_scale / 2 + 12;
    const int rows = static_cast<int>(shown) + (overflow ? 1 : 0);
    const int bx1 = p.x1 - 6;
    const int bx0 = std::max(p.x0 + 2, bx1 - box_w);
    const int by0 = p.y0 + 6;
    const int by1 = by0 + rows * row_h + 6;
    fill_rect(img, bx0, by0, bx1, by1, kWhite);
    hline(img, bx0, bx1, by0, kGrid);
    hline(img, bx0, bx1, by1, kGrid);
    vline(img, bx0, by0, by1, kGrid);
    vline(img, bx1, by0, by1, kGrid);
    for (std::size_t c = 0; c < shown; ++c) {
        const Rgb color = spec.palette == PaletteMode::Monochrome ? spec.mono_color : kTab10[c % kTab10.size()];
        const int y = by0 + 4 + static_cast<int>(c) * row_h;
        fill_rect(img, bx0 + 5, y + 3 * text_scale, bx0 + 5 + 10 * text_scale, y + 3 * text_scale + 2, color);
        draw_text(img, bx0 + 9 + 12 * text_scale, y, s.channel_names[c], kAxisText, text_scale);
    }
    if (overflow) draw_text(img, bx0 + 9 + 12 * text_scale, by0 + 4 + static_cast<int>(shown) * row_h, more, kAxisText, text_scale);
}

inline Panel make_panel(const Image& img, int top, int bottom, UnixSeconds t_lo, UnixSeconds t_hi,
                        std::pair<double, double> vr, int text_scale) {
    const int left = 16 * kGlyphAdvance * text_scale / 2 + 20;
    const int right = img.width - 20;
    return {left, top, right, bottom, t_lo, t_hi, vr.first, vr.second};
}

inline int text_scale_for(const Image& img) { return img.height >= 400 ? 2 : 1; }

}  // namespace detail

inline void check_renderable(const TimeSeries& s) {
    if (s.length == 0 || s.channels == 0) throw RenderError("cannot render an empty series " + s.series_id);
    if (s.values.size() != s.length * s.channels) throw RenderError("series " + s.series_id + " has a malformed value matrix");
}

inline Image rasterize_single(const TimeSeries& s, const PlotSpec& spec) {
    check_renderable(s);
    const auto px = figure_pixels(spec.width_in, spec.height_in, spec);
    Image img(px.width, px.height, kWhite);
    const int ts = detail::text_scale_for(img);
    const auto panel = detail::make_panel(img, 20, img.height - 40 - 8 * ts, s.start_time, s.end_time(),
                                          detail::value_range({&s}), ts);
    detail::draw_axes(img, panel, ts, true);
    detail::draw_series(img, panel, s, spec);
    if (legend_for(spec, s)) detail::draw_legend(img, panel, s, spec, ts);
    return img;
}

inline std::vector<std::uint8_t> render_single(const TimeSeries& s, const PlotSpec& spec = {}) {
    return encode_png(rasterize_single(s, spec), spec.dpi);
}

// Stacked panel (series 1 blue over series 2 orange, shared time axis),
// then each series on its own.
inline std::array<std::vector<std::uint8_t>, 3> render_paired(const TimeSeries& a, const TimeSeries& b,
                                                              const PlotSpec& spec = {}) {
    check_renderable(a);
    check_renderable(b);
    std::array<std::vector<std::uint8_t>, 3> out;
    {
        PlotSpec stacked = spec;
        stacked.height_in = spec.height_in * 10.0 / 6.0;
        stacked.palette = PaletteMode::Monochrome;
        const auto px = figure_pixels(stacked.width_in, stacked.height_in, stacked);
        Image img(px.width, px.height, kWhite);
        const int ts = detail::text_scale_for(img);
        const UnixSeconds t_lo = std::min(a.start_time, b.start_time);
        const UnixSeconds t_hi = std::max(a.end_time(), b.end_time());
        const int usable = img.height - 20 - (40 + 8 * ts);
        const int gap = 24;
        const int h = (usable - gap) / 2;
        const auto pa = detail::make_panel(img, 20, 20 + h, t_lo, t_hi, detail::value_range({&a}), ts);
        const auto pb = detail::make_panel(img, 20 + h + gap, 20 + 2 * h + gap, t_lo, t_hi, detail::value_range({&b}), ts);
        detail::draw_axes(img, pa, ts, false);
        detail::draw_axes(img, pb, ts, true);
        stacked.mono_color = kBlue;
        detail::draw_series(img, pa, a, stacked);
        if (legend_for(spec, a)) detail::draw_legend(img, pa, a, stacked, ts);
        stacked.mono_color = kOrange;
        detail::draw_series(img, pb, b, stacked);
        if (legend_for(spec, b)) detail::draw_legend(img, pb, b, stacked, ts);
        out[0] = encode_png(img, spec.dpi);
    }
    out[1] = render_single(a, spec);
    out[2] = render_single(b, spec);
    return out;
}

}  // namespace arf::render
