#include <doctest.h>

#include <cmath>

#include "histreg/errors.hpp"
#include "histreg/rng.hpp"
#include "histreg/synthetic.hpp"
#include "histreg/warp.hpp"

using namespace histreg;
using namespace histreg::warp;

namespace {

ImageBuffer random_image(std::uint64_t seed, ImageMeta meta, int channels) {
    Rng rng(seed);
    ImageBuffer img(meta, channels);
    for (auto &p : img.pixels) {
        p = static_cast<std::uint8_t>(rng.below(256));
    }
    return img;
}

DvfRaster constant_field(ImageMeta meta, float dx, float dy) {
    DvfRaster f(meta);
    for (auto &v : f.field) {
        v = {dx, dy};
    }
    return f;
}

}  // namespace

TEST_CASE("bilinear sampling") {
    ImageBuffer img(ImageMeta{2, 2}, 1);
    img.at(0, 0, 0) = 10;
    img.at(1, 0, 0) = 20;
    img.at(0, 1, 0) = 30;
    img.at(1, 1, 0) = 40;
    CHECK(bilinear_sample(img, {1, 1})[0] == 40);
    CHECK(bilinear_sample_exact(img, {0.5, 0})[0] == 15.0);
    CHECK(bilinear_sample(img, {-5, -5})[0] == 10);
    CHECK(bilinear_sample(img, {9, 9})[0] == 40);
    CHECK(bilinear_sample_exact(img, {0.5, 0.5})[0] == 25.0);
    // 12.5 rounds away from zero.
    CHECK(bilinear_sample(img, {0.25, 0})[0] == 13);
}

TEST_CASE("zero field is the identity") {
    const auto img = random_image(1, {37, 23}, 3);
    CHECK(warp::warp(img, DvfRaster(img.meta)) == img);
    const auto gray = random_image(2, {16, 16}, 1);
    CHECK(warp::warp(gray, DvfRaster(gray.meta)) == gray);
}

TEST_CASE("integer translation is a shifted gather") {
    const auto img = random_image(3, {40, 30}, 1);
    const auto out = warp::warp(img, constant_field(img.meta, 2.0F, 0.0F));
    for (std::uint32_t y = 0; y < 30; ++y) {
        for (std::uint32_t x = 0; x < 40; ++x) {
            const std::uint32_t sx = std::min(x + 2, 39u);
            CHECK(out.at(x, y, 0) == img.at(sx, y, 0));
        }
    }
    const auto diag = warp::warp(img, constant_field(img.meta, -3.0F, 4.0F));
    for (std::uint32_t y = 0; y + 4 < 30; ++y) {
        for (std::uint32_t x = 3; x < 40; ++x) {
            CHECK(diag.at(x, y, 0) == img.at(x - 3, y + 4, 0));
        }
    }
}

TEST_CASE("constant shift and its inverse compose to the identity inside the border") {
    const auto img = random_image(4, {50, 50}, 3);
    const auto there = warp::warp(img, constant_field(img.meta, 3.0F, -2.0F));
    const auto back = warp::warp(there, constant_field(img.meta, -3.0F, 2.0F));
    for (std::uint32_t y = 6; y < 44; ++y) {
        for (std::uint32_t x = 6; x < 44; ++x) {
            for (int c = 0; c < 3; ++c) {
                CHECK(back.at(x, y, c) == img.at(x, y, c));
            }
        }
    }
}

TEST_CASE("sinusoidal field spot checks") {
    const ImageMeta meta{64, 64};
    const auto img = random_image(5, meta, 1);
    synthetic::FieldParams params;
    params.amplitude = 3.0;
    const auto field = synthetic::make_field_closure(meta, synthetic::FieldKind::Sinusoidal, params, 9);
    const auto raster = synthetic::make_field(meta, field);
    const auto out = warp::warp(img, raster);
    Rng rng(6);
    for (int k = 0; k < 10; ++k) {
        const auto x = static_cast<std::uint32_t>(rng.below(64));
        const auto y = static_cast<std::uint32_t>(rng.below(64));
        const double px = std::clamp(x + static_cast<double>(raster.at(x, y)[0]), 0.0, 63.0);
        const double py = std::clamp(y + static_cast<double>(raster.at(x, y)[1]), 0.0, 63.0);
        const auto x0 = static_cast<std::uint32_t>(std::floor(px));
        const auto y0 = static_cast<std::uint32_t>(std::floor(py));
        const auto x1 = std::min(x0 + 1, 63u);
        const auto y1 = std::min(y0 + 1, 63u);
        const double fx = px - x0;
        const double fy = py - y0;
        const double v = (1 - fx) * (1 - fy) * img.at(x0, y0, 0) + fx * (1 - fy) * img.at(x1, y0, 0) +
                         (1 - fx) * fy * img.at(x0, y1, 0) + fx * fy * img.at(x1, y1, 0);
        CHECK(std::abs(out.at(x, y, 0) - v) <= 0.5 + 1e-9);
    }
}

TEST_CASE("warp output follows the field size") {
    const auto img = random_image(7, {20, 20}, 1);
    const auto out = warp::warp(img, DvfRaster(ImageMeta{8, 5}));
    CHECK(out.meta == ImageMeta{8, 5});
    CHECK(out.at(7, 4, 0) == img.at(7, 4, 0));
    CHECK_THROWS_AS(warp::warp(img, DvfRaster{}), SizeMismatch);
}

TEST_CASE("checkerboard") {
    const auto a = random_image(8, {4, 4}, 1);
    const auto b = random_image(9, {4, 4}, 1);
    CHECK(checkerboard(a, a, 1) == a);
    CHECK(checkerboard(a, a, 3) == a);
    CHECK(checkerboard(a, b, 4) == a);
    CHECK(checkerboard(a, b, 100) == a);
    const auto q = checkerboard(a, b, 2);
    for (std::uint32_t y = 0; y < 4; ++y) {
        for (std::uint32_t x = 0; x < 4; ++x) {
            const bool use_a = ((x / 2) + (y / 2)) % 2 == 0;
            CHECK(q.at(x, y, 0) == (use_a ? a : b).at(x, y, 0));
        }
    }
    CHECK_THROWS_AS(checkerboard(a, random_image(1, {5, 4}, 1), 2), SizeMismatch);
    CHECK_THROWS_AS(checkerboard(a, random_image(1, {4, 4}, 3), 2), SizeMismatch);
}

TEST_CASE("overlay") {
    const ImageBuffer img(ImageMeta{21, 21}, 3, 100);
    CHECK(overlay_landmarks(img, {}, {}) == img);

    const auto one = overlay_landmarks(img, {{10, 10}}, {});
    std::size_t red = 0;
    for (std::uint32_t y = 0; y < 21; ++y) {
        for (std::uint32_t x = 0; x < 21; ++x) {
            const bool inside = (x - 10.0) * (x - 10.0) + (y - 10.0) * (y - 10.0) <= 9.0;
            const bool is_red = one.at(x, y, 0) == 255 && one.at(x, y, 1) == 0 && one.at(x, y, 2) == 0;
            CHECK(inside == is_red);
            red += is_red ? 1 : 0;
        }
    }
    CHECK(red == 29);

    const auto corner = overlay_landmarks(img, {}, {{0, 0}});
    std::size_t blue = 0;
    for (std::uint32_t y = 0; y < 21; ++y) {
        for (std::uint32_t x = 0; x < 21; ++x) {
            blue += corner.at(x, y, 2) == 255 && corner.at(x, y, 0) == 0 ? 1 : 0;
        }
    }
    CHECK(blue == 11);

    const ImageBuffer gray(ImageMeta{5, 5}, 1, 7);
    const auto promoted = overlay_landmarks(gray, {}, {});
    CHECK(promoted.channels == 3);
    CHECK(promoted.at(2, 2, 1) == 7);
}
