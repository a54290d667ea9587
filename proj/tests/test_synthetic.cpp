#include <doctest.h>

#include <cmath>
#include <numbers>

#include "histreg/errors.hpp"
#include "histreg/synthetic.hpp"

using namespace histreg;
using namespace histreg::synthetic;

TEST_CASE("translation and identity fields") {
    FieldParams params;
    params.shift = {3, -2};
    const ImageMeta meta{7, 5};
    const auto t = make_field(meta, make_field_closure(meta, FieldKind::Translation, params, 0));
    for (const auto &v : t.field) {
        CHECK(v[0] == 3.0F);
        CHECK(v[1] == -2.0F);
    }
    const auto id = make_field(meta, make_field_closure(meta, FieldKind::Affine, {}, 0));
    for (const auto &v : id.field) {
        CHECK(v[0] == 0.0F);
        CHECK(v[1] == 0.0F);
    }
}

TEST_CASE("sinusoidal field matches its closed form") {
    const ImageMeta meta{400, 300};
    FieldParams params;
    params.amplitude = 7.0;
    const auto field = make_field_closure(meta, FieldKind::Sinusoidal, params, 31);
    CHECK(field.period() == 400.0);
    const auto [phx, phy] = field.phases();
    const auto raster = make_field(meta, field);
    for (const auto &[x, y] : {std::pair{0u, 0u}, {399u, 299u}, {17u, 250u}, {200u, 3u}, {123u, 45u}}) {
        const double dx = 7.0 * std::sin(2 * std::numbers::pi * y / 400.0 + phx);
        const double dy = 7.0 * std::sin(2 * std::numbers::pi * x / 400.0 + phy);
        CHECK(raster.at(x, y)[0] == static_cast<float>(dx));
        CHECK(raster.at(x, y)[1] == static_cast<float>(dy));
    }
    FieldParams big;
    big.amplitude = 40.0;
    CHECK_THROWS_AS(make_field_closure(meta, FieldKind::Sinusoidal, big, 0), DataError);
}

TEST_CASE("make_matches") {
    const ImageMeta meta{1000, 1000};
    const auto field = make_field_closure(meta, FieldKind::Sinusoidal, {}, 4);

    const auto clean = make_matches(field, meta, 200, 0.0, 0.0, 50.0, 4);
    for (std::size_t i = 0; i < clean.matches.size(); ++i) {
        const auto &m = clean.matches[i];
        const auto d = field(m.dst);
        CHECK(m.src == Point2{m.dst.x + d.dx, m.dst.y + d.dy});
        CHECK(!clean.outlier[i]);
    }

    const auto dirty = make_matches(field, meta, 1000, 1.0, 0.05, 50.0, 4);
    CHECK(std::count(dirty.outlier.begin(), dirty.outlier.end(), true) == 50);
    CHECK(dirty.outlier.size() == dirty.matches.size());
    for (std::size_t i = 0; i < dirty.matches.size(); ++i) {
        const auto &m = dirty.matches[i];
        const auto d = field(m.dst);
        const double err = std::hypot(m.src.x - m.dst.x - d.dx, m.src.y - m.dst.y - d.dy);
        if (dirty.outlier[i]) {
            CHECK(err >= 50.0 - 6.0);
        }
        CHECK(m.dst.x >= 0);
        CHECK(m.dst.x <= 999);
    }

    // Noise bound needs a large sample: P(|e| > 4 sigma) = exp(-8) in 2-D.
    const auto many = make_matches(field, meta, 100000, 1.0, 0.0, 50.0, 5);
    std::size_t within = 0;
    for (const auto &m : many.matches.pairs()) {
        const auto d = field(m.dst);
        within += std::hypot(m.src.x - m.dst.x - d.dx, m.src.y - m.dst.y - d.dy) <= 4.0 ? 1 : 0;
    }
    CHECK(static_cast<double>(within) >= 0.999 * 100000);

    const auto again = make_matches(field, meta, 1000, 1.0, 0.05, 50.0, 4);
    CHECK(again.matches == dirty.matches);
    CHECK(again.outlier == dirty.outlier);
    CHECK_THROWS_AS(make_matches(field, meta, 10, 1.0, 1.0, 50.0, 4), DataError);
}

TEST_CASE("landmarks and image pair") {
    const ImageMeta meta{120, 90};
    FieldParams params;
    params.shift = {4, -3};
    const auto field = make_field_closure(meta, FieldKind::Translation, params, 2);
    const auto lm = make_landmarks(meta, 30, 2);
    for (const auto &p : lm) {
        CHECK(p.x >= 10);
        CHECK(p.x <= 109);
        CHECK(p.y >= 10);
        CHECK(p.y <= 79);
    }
    const auto moved = map_landmarks(lm, field);
    CHECK(moved[3] == Point2{lm[3].x + 4, lm[3].y - 3});

    // moving(q) = fixed(q - shift) for an integer shift.
    const auto pair = make_image_pair(meta, field, 2);
    for (std::uint32_t y = 5; y < 80; y += 7) {
        for (std::uint32_t x = 5; x < 110; x += 7) {
            CHECK(pair.moving.at(x + 4, y - 3, 0) == pair.fixed.at(x, y, 0));
        }
    }
    const auto inv = field.invert({50, 50});
    CHECK(inv == Point2{46, 53});
}
