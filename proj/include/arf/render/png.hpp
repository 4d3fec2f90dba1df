#pragma once

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "arf/core/error.hpp"

namespace arf::render {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

// 8-bit RGB raster, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h, Rgb fill) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3) {
        for (std::size_t i = 0; i < pixels.size(); i += 3) {
            pixels[i] = fill.r;
            pixels[i + 1] = fill.g;
            pixels[i + 2] = fill.b;
        }
    }

    bool inside(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width && y < height; }

    void set(int x, int y, Rgb c) noexcept {
        if (!inside(x, y)) return;
        auto* p = &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
    }

    Rgb get(int x, int y) const noexcept {
        const auto* p = &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
        return {p[0], p[1], p[2]};
    }
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_chunk(std::vector<std::uint8_t>& out, std::string_view type, std::span<const std::uint8_t> data) {
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t crc_from = out.size();
    out.insert(out.end(), type.begin(), type.end());
    out.insert(out.end(), data.begin(), data.end());
    const auto crc = crc32(0L, out.data() + crc_from, static_cast<uInt>(out.size() - crc_from));
    put_u32(out, static_cast<std::uint32_t>(crc));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
    return (std::uint32_t(b[at]) << 24) | (std::uint32_t(b[at + 1]) << 16) | (std::uint32_t(b[at + 2]) << 8) |
           std::uint32_t(b[at + 3]);
}

}  // namespace detail

inline constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

// Truecolor PNG, Sub filter on every row, zlib level 9. The physical size
// chunk records the DPI.
inline std::vector<std::uint8_t> encode_png(const Image& img, int dpi = 100) {
    if (img.width <= 0 || img.height <= 0) throw RenderError("cannot encode an empty image");
    std::vector<std::uint8_t> raw;
    const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
    raw.reserve((stride + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(1);
        const std::uint8_t* row = &img.pixels[y * stride];
        for (std::size_t i = 0; i < stride; ++i) raw.push_back(static_cast<std::uint8_t>(row[i] - (i >= 3 ? row[i - 3] : 0)));
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> z(bound);
    if (compress2(z.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw RenderError("zlib compression failed");
    z.resize(bound);

    std::vector<std::uint8_t> out(std::begin(kPngSignature), std::end(kPngSignature));
    std::vector<std::uint8_t> ihdr;
    detail::put_u32(ihdr, static_cast<std::uint32_t>(img.width));
    detail::put_u32(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});
    detail::put_chunk(out, "IHDR", ihdr);
    std::vector<std::uint8_t> phys;
    const auto ppm = static_cast<std::uint32_t>(dpi / 0.0254 + 0.5);
    detail::put_u32(phys, ppm);
    detail::put_u32(phys, ppm);
    phys.push_back(1);
    detail::put_chunk(out, "pHYs", phys);
    detail::put_chunk(out, "IDAT", z);
    detail::put_chunk(out, "IEND", {});
    return out;
}

struct PngInfo {
    int width = 0;
    int height = 0;
    int dpi = 0;
};

// Reads dimensions and DPI from a PNG produced by encode_png.
inline PngInfo read_png_info(std::span<const std::uint8_t> png) {
    if (png.size() < 33 || !std::equal(std::begin(kPngSignature), std::end(kPngSignature), png.begin()))
        throw RenderError("not a PNG");
    PngInfo info;
    std::size_t at = 8;
    while (at + 12 <= png.size()) {
        const auto len = detail::get_u32(png, at);
        const std::string_view type(reinterpret_cast<const char*>(png.data() + at + 4), 4);
        if (at + 12 + len > png.size()) throw RenderError("truncated PNG chunk");
        if (type == "IHDR") {
            info.width = static_cast<int>(detail::get_u32(png, at + 8));
            info.height = static_cast<int>(detail::get_u32(png, at + 12));
        } else if (type == "pHYs") {
            info.dpi = static_cast<int>(detail::get_u32(png, at + 8) * 0.0254 + 0.5);
        } else if (type == "IEND") {
            break;
        }
        at += 12 + len;
    }
    return info;
}

}  // namespace arf::render
