#include <gtest/gtest.h>

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "arf/core/error.hpp"
#include "arf/render/plot.hpp"
#include "arf/render/png.hpp"

using namespace arf;
using namespace arf::render;

namespace {

TimeSeries wave(std::size_t T, std::size_t V, UnixSeconds start = 1'740'787'200, std::string id = "s") {
    TimeSeries s;
    s.series_id = std::move(id);
    s.start_time = start;
    s.step = 60;
    s.length = T;
    s.channels = V;
    for (std::size_t c = 0; c < V; ++c) s.channel_names.push_back("pod:" + std::to_string(c + 1));
    s.values.resize(T * V);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t c = 0; c < V; ++c)
            s.at(t, c) = std::sin(0.05 * static_cast<double>(t) + static_cast<double>(c)) + static_cast<double>(c);
    return s;
}

// Decoder for the encoder's own output: one IDAT, 8-bit RGB, Sub filter.
Image decode(const std::vector<std::uint8_t>& png) {
    const auto info = read_png_info(png);
    std::size_t at = 8;
    std::vector<std::uint8_t> z;
    while (at + 12 <= png.size()) {
        const std::uint32_t len = (png[at] << 24) | (png[at + 1] << 16) | (png[at + 2] << 8) | png[at + 3];
        if (std::string(png.begin() + at + 4, png.begin() + at + 8) == "IDAT")
            z.insert(z.end(), png.begin() + at + 8, png.begin() + at + 8 + len);
        at += 12 + len;
    }
    const std::size_t stride = static_cast<std::size_t>(info.width) * 3;
    std::vector<std::uint8_t> raw((stride + 1) * info.height);
    uLongf n = raw.size();
    EXPECT_EQ(uncompress(raw.data(), &n, z.data(), z.size()), Z_OK);
    Image img(info.width, info.height, kWhite);
    for (int y = 0; y < info.height; ++y) {
        const std::uint8_t* row = &raw[y * (stride + 1)];
        EXPECT_EQ(row[0], 1);
        for (std::size_t i = 0; i < stride; ++i) {
            const std::uint8_t left = i >= 3 ? img.pixels[y * stride + i - 3] : 0;
            img.pixels[y * stride + i] = static_cast<std::uint8_t>(row[i + 1] + left);
        }
    }
    return img;
}

std::pair<int, int> x_extent(const Image& img, Rgb color) {
    int lo = img.width, hi = -1;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (img.get(x, y) == color) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
    return {lo, hi};
}

}  // namespace

TEST(Render, DefaultFigureFitsTheSizeCap) {
    const auto png = render_single(wave(500, 3));
    const auto info = read_png_info(png);
    EXPECT_EQ(info.width, 1500);
    EXPECT_EQ(info.height, 500);
    EXPECT_EQ(info.dpi, 100);
    PlotSpec big;
    big.width_in = 40.0;
    big.height_in = 30.0;
    const auto capped = read_png_info(render_single(wave(300, 1), big));
    EXPECT_LE(std::max(capped.width, capped.height), 1500);
    EXPECT_EQ(capped.width, 1500);
    EXPECT_EQ(capped.height, 1125);
}

TEST(Render, LongWideSeriesStaysWithinTheCap) {
    const auto info = read_png_info(render_single(wave(50'000, 20)));
    EXPECT_LE(std::max(info.width, info.height), 1500);
}

TEST(Render, LegendRule) {
    EXPECT_TRUE(legend_for(Category::Identification, 3));
    EXPECT_TRUE(legend_for(Category::Identification, 40));
    EXPECT_TRUE(legend_for(Category::Presence, 7));
    EXPECT_FALSE(legend_for(Category::Presence, 8));
    const auto s = wave(400, 10);
    PlotSpec ident;
    ident.category = Category::Identification;
    PlotSpec presence;
    presence.category = Category::Presence;
    EXPECT_NE(render_single(s, ident), render_single(s, presence));
}

TEST(Render, IdentificationLegendShowsEveryChannelColour) {
    const auto s = wave(400, 3);
    PlotSpec spec;
    spec.category = Category::Identification;
    const auto img = decode(render_single(s, spec));
    for (std::size_t c = 0; c < 3; ++c) EXPECT_GE(x_extent(img, kTab10[c]).second, 0) << c;
}

TEST(Render, SameInputSameBytes) {
    const auto s = wave(700, 4);
    EXPECT_EQ(render_single(s), render_single(s));
    const auto b = wave(500, 2, s.start_time + 3600, "t");
    EXPECT_EQ(render_paired(s, b), render_paired(s, b));
}

TEST(Render, PairedProducesThreeImagesAndSwapsWithInputs) {
    const auto a = wave(500, 2, 1'740'787'200, "a");
    const auto b = wave(300, 1, 1'740'787'200 + 600, "b");
    const auto ab = render_paired(a, b);
    const auto ba = render_paired(b, a);
    for (const auto& png : ab) EXPECT_LE(std::max(read_png_info(png).width, read_png_info(png).height), 1500);
    EXPECT_EQ(ab[1], ba[2]);
    EXPECT_EQ(ab[2], ba[1]);
    EXPECT_EQ(ab[1], render_single(a));
    EXPECT_NE(ab[0], ba[0]);
}

TEST(Render, StackedPanelSharesTheTimeAxis) {
    // Disjoint halves of the union range: series 1 on the left, series 2 on the right.
    PlotSpec spec;
    spec.category = Category::Presence;
    const auto a = wave(300, 9, 1'740'787'200, "a");
    const auto b = wave(300, 9, 1'740'787'200 + 300 * 60, "b");
    const auto img = decode(render_paired(a, b, spec)[0]);
    const auto blue = x_extent(img, kBlue);
    const auto orange = x_extent(img, kOrange);
    ASSERT_GE(blue.second, 0);
    ASSERT_GE(orange.second, 0);
    EXPECT_LT(blue.second, orange.first);
    EXPECT_LT(blue.second, img.width * 6 / 10);
    EXPECT_GT(orange.first, img.width * 4 / 10);
}

TEST(Render, EmptySeriesIsARenderError) {
    TimeSeries s;
    s.series_id = "empty";
    EXPECT_THROW(render_single(s), RenderError);
    auto ok = wave(300, 1);
    EXPECT_THROW(render_paired(ok, s), RenderError);
    auto bad = wave(300, 2);
    bad.values.pop_back();
    EXPECT_THROW(render_single(bad), RenderError);
}

TEST(Render, MissingAndConstantValuesStillRender) {
    auto s = wave(400, 2);
    for (std::size_t t = 100; t < 200; ++t) s.at(t, 0) = kMissing;
    EXPECT_NO_THROW(render_single(s));
    auto flat = wave(400, 1);
    std::fill(flat.values.begin(), flat.values.end(), 0.0);
    EXPECT_NO_THROW(render_single(flat));
    std::fill(flat.values.begin(), flat.values.end(), kMissing);
    EXPECT_NO_THROW(render_single(flat));
}

TEST(Render, DecimationKeepsExtremes) {
    std::vector<double> v(10'000);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(0.01 * static_cast<double>(i));
    v[4321] = 50.0;
    v[8765] = -50.0;
    const auto idx = decimate_minmax(v, 500);
    EXPECT_LE(idx.size(), 1000u);
    EXPECT_NE(std::find(idx.begin(), idx.end(), 4321u), idx.end());
    EXPECT_NE(std::find(idx.begin(), idx.end(), 8765u), idx.end());
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
}
