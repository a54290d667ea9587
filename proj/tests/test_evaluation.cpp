#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "histreg/errors.hpp"
#include "histreg/evaluation.hpp"
#include "histreg/rng.hpp"

using namespace histreg;
using namespace histreg::evaluation;

TEST_CASE("rtre hand cases") {
    CHECK(rtre({3, 4}, {3, 4}, {1000, 1000}) == 0.0);
    CHECK(std::abs(rtre({0, 0}, {10, 10}, {1000, 1000}) - 0.01) < 1e-15);
    CHECK(rtre({0, 0}, {3, 4}, {300, 400}) == 0.01);
    CHECK(rtre({0, 0}, {3, 4}, {300, 400}, ErrorMode::Squared) == 25.0 / 500.0);
}

TEST_CASE("rtre is scale consistent") {
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const Point2 a{rng.uniform(0, 500), rng.uniform(0, 500)};
        const Point2 b{rng.uniform(0, 500), rng.uniform(0, 500)};
        CHECK(std::abs(rtre(a, b, {500, 300}) - rtre(4.0 * a, 4.0 * b, {2000, 1200})) < 1e-12);
    }
}

TEST_CASE("transfer_landmarks") {
    DvfRaster zero(ImageMeta{10, 10});
    const LandmarkSet lm{{1, 2}, {3.5, 7.25}};
    CHECK(transfer_landmarks(lm, zero) == lm);

    DvfRaster shift(ImageMeta{10, 10});
    for (auto &v : shift.field) {
        v = {2.0F, -1.0F};
    }
    const auto moved = transfer_landmarks(lm, shift);
    CHECK(moved[0] == Point2{3, 1});
    CHECK(moved[1] == Point2{5.5, 6.25});

    // Ramp dx = x, dy = 2y; bilinear reproduces it exactly.
    DvfRaster ramp(ImageMeta{10, 10});
    for (std::uint32_t y = 0; y < 10; ++y) {
        for (std::uint32_t x = 0; x < 10; ++x) {
            ramp.at(x, y) = {static_cast<float>(x), static_cast<float>(2 * y)};
        }
    }
    const auto r = transfer_landmarks({{2.25, 3.5}}, ramp);
    CHECK(r[0].x == doctest::Approx(4.5));
    CHECK(r[0].y == doctest::Approx(10.5));
}

TEST_CASE("median") {
    CHECK(median_of({3, 1, 2}) == 2);
    CHECK(median_of({4, 1, 3, 2}) == 2.5);
}

TEST_CASE("evaluate: hand-computed two-pair report") {
    // Landmarks placed so the per-pair rTRE lists are [0.01, 0.03] and [0.02, 0.02]
    // on a 300 x 400 image (diagonal 500).
    PairInput p1{{{0, 0}, {0, 0}}, {{5, 0}, {15, 0}}, {300, 400}};
    PairInput p2{{{0, 0}, {1, 1}}, {{10, 0}, {1, 11}}, {300, 400}};
    const auto report = evaluate({p1, p2});
    CHECK(report.pairs[0].rtre == std::vector<double>{0.01, 0.03});
    CHECK(report.aggregate("Average-Average") == doctest::Approx(0.02));
    CHECK(report.aggregate("Median-Median") == doctest::Approx(0.02));
    CHECK(report.aggregate("Max-Average") == doctest::Approx(0.02));
    CHECK(report.aggregate("Max-Median") == doctest::Approx(0.02));

    PairInput same{{{1, 1}, {5, 5}}, {{1, 1}, {5, 5}}, {100, 100}};
    for (double v : evaluate({same}).aggregates) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("evaluate: errors") {
    CHECK_THROWS_AS(evaluate({}), NoPairs);
    CHECK_THROWS_AS(evaluate({}), LengthMismatch);
    PairInput bad{{{0, 0}}, {{0, 0}, {1, 1}}, {10, 10}};
    CHECK_THROWS_AS(evaluate({bad}), LengthMismatch);
}

TEST_CASE("evaluate: permutation invariance") {
    Rng rng(2);
    std::vector<PairInput> pairs;
    for (int k = 0; k < 6; ++k) {
        PairInput p;
        p.meta = {static_cast<std::uint32_t>(200 + 10 * k), 300};
        for (int i = 0; i < 9; ++i) {
            p.predicted.push_back({rng.uniform(0, 200), rng.uniform(0, 300)});
            p.truth.push_back({rng.uniform(0, 200), rng.uniform(0, 300)});
        }
        pairs.push_back(p);
    }
    const auto base = evaluate(pairs);
    std::reverse(pairs.begin(), pairs.end());
    std::reverse(pairs[0].predicted.begin(), pairs[0].predicted.end());
    std::reverse(pairs[0].truth.begin(), pairs[0].truth.end());
    const auto shuffled = evaluate(pairs);
    for (std::size_t k = 0; k < 6; ++k) {
        CHECK(std::abs(base.aggregates[k] - shuffled.aggregates[k]) < 1e-15);
    }
}
