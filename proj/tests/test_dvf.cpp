#include <doctest.h>

#include <cmath>

#include "histreg/dvf.hpp"
#include "histreg/errors.hpp"
#include "histreg/parallel.hpp"
#include "histreg/rng.hpp"

using namespace histreg;
using namespace histreg::dvf;

namespace {

// Dense Gaussian elimination with partial pivoting on the raw (unscaled)
// interpolation system [K P; P^T 0] [w; a] = [v; 0].
struct Oracle {
    std::vector<Point2> c;
    std::vector<double> wx, wy;
    double ax[3] = {}, ay[3] = {};

    static double u(double r) { return r > 0 ? r * r * std::log(r) : 0.0; }

    explicit Oracle(const MatchSet &m) {
        const std::size_t n = m.size();
        const std::size_t dim = n + 3;
        std::vector<std::vector<double>> a(dim, std::vector<double>(dim + 2, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            c.push_back(m[i].dst);
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                a[i][j] = u(distance(c[i], c[j]));
            }
            a[i][n] = a[n][i] = 1;
            a[i][n + 1] = a[n + 1][i] = c[i].x;
            a[i][n + 2] = a[n + 2][i] = c[i].y;
            a[i][dim] = m[i].src.x - m[i].dst.x;
            a[i][dim + 1] = m[i].src.y - m[i].dst.y;
        }
        for (std::size_t col = 0; col < dim; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < dim; ++r) {
                if (std::abs(a[r][col]) > std::abs(a[piv][col])) {
                    piv = r;
                }
            }
            std::swap(a[col], a[piv]);
            for (std::size_t r = 0; r < dim; ++r) {
                if (r == col) {
                    continue;
                }
                const double f = a[r][col] / a[col][col];
                for (std::size_t k = col; k < dim + 2; ++k) {
                    a[r][k] -= f * a[col][k];
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            wx.push_back(a[i][dim] / a[i][i]);
            wy.push_back(a[i][dim + 1] / a[i][i]);
        }
        for (int k = 0; k < 3; ++k) {
            ax[k] = a[n + k][dim] / a[n + k][n + k];
            ay[k] = a[n + k][dim + 1] / a[n + k][n + k];
        }
    }

    [[nodiscard]] DisplacementVector eval(Point2 p) const {
        double dx = ax[0] + ax[1] * p.x + ax[2] * p.y;
        double dy = ay[0] + ay[1] * p.x + ay[2] * p.y;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double k = u(distance(p, c[i]));
            dx += wx[i] * k;
            dy += wy[i] * k;
        }
        return {dx, dy};
    }
};

MatchSet random_matches(std::uint64_t seed, std::size_t n, double span = 1000.0) {
    Rng rng(seed);
    MatchSet m;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 dst{rng.uniform(0, span), rng.uniform(0, span)};
        m.add({{dst.x + rng.uniform(-10, 10), dst.y + rng.uniform(-10, 10)}, dst});
    }
    return m;
}

}  // namespace

TEST_CASE("kernel") {
    CHECK(tps_kernel(0.0) == 0.0);
    CHECK(tps_kernel(1.0) == 0.0);
    CHECK(tps_kernel(std::exp(1.0)) == doctest::Approx(std::exp(2.0)));
}

TEST_CASE("pure translation goes entirely into the affine part") {
    MatchSet m;
    for (const Point2 dst : {Point2{0, 0}, Point2{10, 0}, Point2{0, 10}, Point2{7, 9}}) {
        m.add({{dst.x - 7, dst.y + 3}, dst});
    }
    const auto model = tps_fit(m);
    for (const auto &w : model.weights) {
        CHECK(std::abs(w.dx) < 1e-9);
        CHECK(std::abs(w.dy) < 1e-9);
    }
    CHECK(std::abs(model.affine.linear[0] - 1) < 1e-9);
    CHECK(std::abs(model.affine.linear[1]) < 1e-9);
    CHECK(std::abs(model.affine.linear[2]) < 1e-9);
    CHECK(std::abs(model.affine.linear[3] - 1) < 1e-9);
    CHECK(std::abs(model.affine.translation.x + 7) < 1e-9);
    CHECK(std::abs(model.affine.translation.y - 3) < 1e-9);

    const auto d = tps_eval(model, {123.4, -56.7});
    CHECK(std::abs(d.dx + 7) < 1e-9);
    CHECK(std::abs(d.dy - 3) < 1e-9);

    const auto raster = rasterize(model, {4, 4});
    for (const auto &v : raster.field) {
        CHECK(v[0] == -7.0F);
        CHECK(v[1] == 3.0F);
    }
}

TEST_CASE("affine-generated matches reproduce the affine field") {
    geometry::AffineTransform2D a;
    a.linear = {1.01, 0.02, -0.03, 0.97};
    a.translation = {4, -6};
    Rng rng(3);
    MatchSet m;
    for (int i = 0; i < 60; ++i) {
        const Point2 dst{rng.uniform(0, 500), rng.uniform(0, 500)};
        m.add({a.apply(dst), dst});
    }
    const auto model = tps_fit(m);
    for (const auto &w : model.weights) {
        CHECK(std::abs(w.dx) < 1e-9);
        CHECK(std::abs(w.dy) < 1e-9);
    }
    for (int k = 0; k < 4; ++k) {
        CHECK(std::abs(model.affine.linear[k] - a.linear[k]) < 1e-9);
    }
    for (int i = 0; i < 200; ++i) {
        const Point2 p{rng.uniform(0, 500), rng.uniform(0, 500)};
        const auto d = tps_eval(model, p);
        const auto q = a.apply(p);
        CHECK(std::abs(d.dx - (q.x - p.x)) < 1e-6);
        CHECK(std::abs(d.dy - (q.y - p.y)) < 1e-6);
    }
}

TEST_CASE("identity matches give a zero raster") {
    MatchSet m;
    Rng rng(4);
    for (int i = 0; i < 10; ++i) {
        const Point2 p{rng.uniform(0, 20), rng.uniform(0, 20)};
        m.add({p, p});
    }
    const auto raster = rasterize(tps_fit(m), {8, 8});
    for (const auto &v : raster.field) {
        CHECK(std::abs(v[0]) < 1e-9F);
        CHECK(std::abs(v[1]) < 1e-9F);
    }
}

TEST_CASE("interpolation matches an independent solve") {
    MatchSet bent;
    bent.add({{0, 0}, {0, 0}});
    bent.add({{100, 0}, {100, 0}});
    bent.add({{0, 100}, {0, 100}});
    bent.add({{100, 100}, {100, 100}});
    bent.add({{58, 47}, {50, 50}});
    const Oracle oracle(bent);
    const auto model = tps_fit(bent);
    CHECK(model.lambda == 0.0);
    for (std::size_t i = 0; i < bent.size(); ++i) {
        const auto d = tps_eval(model, bent[i].dst);
        CHECK(std::abs(d.dx - (bent[i].src.x - bent[i].dst.x)) < 1e-6);
        CHECK(std::abs(d.dy - (bent[i].src.y - bent[i].dst.y)) < 1e-6);
    }
    for (const Point2 p : {Point2{25, 25}, Point2{75, 10}, Point2{-20, 130}}) {
        const auto d = tps_eval(model, p);
        const auto o = oracle.eval(p);
        CHECK(std::abs(d.dx - o.dx) < 1e-6);
        CHECK(std::abs(d.dy - o.dy) < 1e-6);
    }

    MatchSet three;
    three.add({{1, 2}, {0, 0}});
    three.add({{13, -1}, {10, 0}});
    three.add({{0, 12}, {0, 10}});
    const Oracle o3(three);
    const auto m3 = tps_fit(three);
    const Point2 mid{10.0 / 3.0, 10.0 / 3.0};
    CHECK(std::abs(tps_eval(m3, mid).dx - o3.eval(mid).dx) < 1e-9);
    CHECK(std::abs(tps_eval(m3, mid).dy - o3.eval(mid).dy) < 1e-9);

    const auto raster = rasterize(m3, {12, 12});
    for (const auto &[x, y] : {std::pair{0u, 0u}, {5u, 5u}, {11u, 0u}, {3u, 9u}, {11u, 11u}}) {
        const auto d = tps_eval(m3, {static_cast<double>(x), static_cast<double>(y)});
        CHECK(raster.at(x, y)[0] == static_cast<float>(d.dx));
        CHECK(raster.at(x, y)[1] == static_cast<float>(d.dy));
    }
}

TEST_CASE("random controls: residual and oracle agreement") {
    const auto m = random_matches(10, 100);
    const auto model = tps_fit(m);
    CHECK(model.lambda == 0.0);
    const Oracle oracle(m);
    Rng rng(1);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto d = tps_eval(model, m[i].dst);
        CHECK(std::abs(d.dx - (m[i].src.x - m[i].dst.x)) < 1e-6);
        CHECK(std::abs(d.dy - (m[i].src.y - m[i].dst.y)) < 1e-6);
    }
    for (int i = 0; i < 20; ++i) {
        const Point2 p{rng.uniform(0, 1000), rng.uniform(0, 1000)};
        CHECK(std::abs(tps_eval(model, p).dx - oracle.eval(p).dx) < 1e-5);
    }
}

TEST_CASE("bending energy: the fit is the smoothest interpolant of its data") {
    // A spline through a superset also interpolates the subset, so it cannot
    // bend less than the subset's own spline.
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto super = random_matches(seed, 40, 200);
        MatchSet sub;
        for (std::size_t i = 0; i < 25; ++i) {
            sub.add(super[i]);
        }
        const double e_sub = bending_energy(tps_fit(sub));
        const double e_super = bending_energy(tps_fit(super));
        CHECK(e_sub >= 0.0);
        CHECK(e_sub <= e_super * (1 + 1e-9));
    }
}

TEST_CASE("duplicates are averaged, degenerate inputs rejected") {
    MatchSet m;
    m.add({{2, 0}, {0, 0}});
    m.add({{0, 0}, {0, 0}});
    m.add({{10, 0}, {10, 0}});
    m.add({{0, 10}, {0, 10}});
    const auto model = tps_fit(m);
    CHECK(model.controls.size() == 3);
    CHECK(std::abs(tps_eval(model, {0, 0}).dx - 1.0) < 1e-9);

    MatchSet two;
    two.add({{0, 0}, {0, 0}});
    two.add({{1, 1}, {1, 1}});
    CHECK_THROWS_AS(tps_fit(two), TooFewMatches);
    MatchSet line;
    for (int i = 0; i < 5; ++i) {
        line.add({{i + 1.0, i + 0.0}, {i + 0.0, i + 0.0}});
    }
    CHECK_THROWS_AS(tps_fit(line), DegenerateGeometry);
    CHECK_THROWS_AS(tps_fit(m, -1.0), DataError);
}

TEST_CASE("regularized fit smooths") {
    const auto m = random_matches(6, 50, 300);
    const auto exact = tps_fit(m, 0.0);
    const auto smooth = tps_fit(m, 1e3);
    CHECK(smooth.lambda == 1e3);
    CHECK(bending_energy(smooth) < bending_energy(exact));
}

TEST_CASE("raster is thread-count independent") {
    const auto model = tps_fit(random_matches(7, 30, 64));
    set_thread_cap(1);
    const auto a = rasterize(model, {64, 48});
    set_thread_cap(4);
    const auto b = rasterize(model, {64, 48});
    CHECK(a == b);
}

TEST_CASE("jacobian stats") {
    DvfRaster zero(ImageMeta{5, 5});
    const auto s = jacobian_stats(zero);
    CHECK(s.min == 1.0);
    CHECK(s.mean == 1.0);
    CHECK(s.negative_fraction == 0.0);

    DvfRaster fold(ImageMeta{5, 1});
    for (std::uint32_t x = 0; x < 5; ++x) {
        fold.at(x, 0) = {-2.0F * static_cast<float>(x), 0.0F};
    }
    const auto f = jacobian_stats(fold);
    CHECK(f.min == doctest::Approx(-1.0));
    CHECK(f.negative_fraction == 1.0);
}
