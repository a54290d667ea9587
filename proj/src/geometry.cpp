#include "histreg/geometry.hpp"

#include <gmpxx.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "histreg/errors.hpp"

namespace histreg::geometry {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon() / 2.0;  // 2^-53
constexpr double kOrientBound = (3.0 + 16.0 * kEps) * kEps;
constexpr double kInCircleBound = (10.0 + 96.0 * kEps) * kEps;

int sign_of(const mpq_class &v) { return sgn(v); }

int orient_exact(Point2 a, Point2 b, Point2 c) {
    const mpq_class acx = mpq_class(a.x) - mpq_class(c.x);
    const mpq_class bcx = mpq_class(b.x) - mpq_class(c.x);
    const mpq_class acy = mpq_class(a.y) - mpq_class(c.y);
    const mpq_class bcy = mpq_class(b.y) - mpq_class(c.y);
    return sign_of(acx * bcy - acy * bcx);
}

int in_circle_exact(Point2 a, Point2 b, Point2 c, Point2 d) {
    const mpq_class adx = mpq_class(a.x) - mpq_class(d.x);
    const mpq_class ady = mpq_class(a.y) - mpq_class(d.y);
    const mpq_class bdx = mpq_class(b.x) - mpq_class(d.x);
    const mpq_class bdy = mpq_class(b.y) - mpq_class(d.y);
    const mpq_class cdx = mpq_class(c.x) - mpq_class(d.x);
    const mpq_class cdy = mpq_class(c.y) - mpq_class(d.y);
    const mpq_class alift = adx * adx + ady * ady;
    const mpq_class blift = bdx * bdx + bdy * bdy;
    const mpq_class clift = cdx * cdx + cdy * cdy;
    const mpq_class det = alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) +
                          clift * (adx * bdy - bdx * ady);
    return sign_of(det);
}

std::uint64_t edge_key(std::size_t u, std::size_t v) {
    return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
}

class SweepTriangulator {
public:
    explicit SweepTriangulator(std::span<const Point2> points) : pts_(points) {}

    std::vector<std::array<std::size_t, 3>> run() {
        std::vector<std::size_t> order(pts_.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (pts_[a].x != pts_[b].x) {
                return pts_[a].x < pts_[b].x;
            }
            if (pts_[a].y != pts_[b].y) {
                return pts_[a].y < pts_[b].y;
            }
            return a < b;
        });
        order.erase(std::unique(order.begin(), order.end(),
                                [&](std::size_t a, std::size_t b) { return pts_[a] == pts_[b]; }),
                    order.end());

        if (order.size() < 3) {
            throw DegenerateGeometry("triangulation needs at least 3 distinct points");
        }
        std::size_t k = 2;
        int side = 0;
        for (; k < order.size(); ++k) {
            side = orient(pts_[order[0]], pts_[order[1]], pts_[order[k]]);
            if (side != 0) {
                break;
            }
        }
        if (side == 0) {
            throw DegenerateGeometry("all points are collinear");
        }

        seed_fan(order, k, side);
        for (std::size_t i = k + 1; i < order.size(); ++i) {
            insert_outside(order[i]);
        }

        std::vector<std::array<std::size_t, 3>> out;
        out.reserve(tris_.size());
        for (const auto &t : tris_) {
            if (signed_area(pts_[t[0]], pts_[t[1]], pts_[t[2]]) > kMinTriangleArea) {
                out.push_back(t);
            }
        }
        return out;
    }

private:
    void add_triangle(std::size_t a, std::size_t b, std::size_t c) {
        const std::size_t id = tris_.size();
        tris_.push_back({a, b, c});
        link(id);
    }

    void link(std::size_t id) {
        const auto &t = tris_[id];
        for (int e = 0; e < 3; ++e) {
            edges_[edge_key(t[e], t[(e + 1) % 3])] = id;
        }
    }

    void unlink(std::size_t id) {
        const auto &t = tris_[id];
        for (int e = 0; e < 3; ++e) {
            edges_.erase(edge_key(t[e], t[(e + 1) % 3]));
        }
    }

    // Collinear prefix order[0..k) joined to order[k].
    void seed_fan(const std::vector<std::size_t> &order, std::size_t k, int side) {
        const std::size_t apex = order[k];
        for (std::size_t i = 0; i + 1 < k; ++i) {
            if (side > 0) {
                add_triangle(order[i], order[i + 1], apex);
            } else {
                add_triangle(order[i + 1], order[i], apex);
            }
            if (i + 2 < k) {
                pending_.push_back({order[i + 1], apex});
            }
        }
        if (side > 0) {
            hull_.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
        } else {
            hull_.assign(order.rbegin() + static_cast<std::ptrdiff_t>(order.size() - k),
                         order.rend());
        }
        hull_.push_back(apex);
        legalize();
    }

    // p is lexicographically largest so far, hence strictly outside the hull.
    void insert_outside(std::size_t p) {
        const std::size_t h = hull_.size();
        auto visible = [&](std::size_t i) {
            return orient(pts_[hull_[i % h]], pts_[hull_[(i + 1) % h]], pts_[p]) < 0;
        };
        std::size_t start = h;
        for (std::size_t i = 0; i < h; ++i) {
            if (visible(i) && !visible(i + h - 1)) {
                start = i;
                break;
            }
        }
        if (start == h) {
            throw DegenerateGeometry("sweep insertion found no visible hull edge");
        }
        std::size_t count = 0;
        while (count < h && visible(start + count)) {
            const std::size_t a = hull_[(start + count) % h];
            const std::size_t b = hull_[(start + count + 1) % h];
            add_triangle(b, a, p);
            pending_.push_back({a, b});
            ++count;
        }

        // Hull vertices strictly inside the visible chain are no longer on the hull.
        std::vector<std::size_t> next;
        next.reserve(h + 1);
        const std::size_t last = (start + count) % h;
        for (std::size_t i = 0; i <= h - count; ++i) {
            next.push_back(hull_[(last + i) % h]);
        }
        next.push_back(p);
        hull_ = std::move(next);
        legalize();
    }

    void legalize() {
        while (!pending_.empty()) {
            const auto [a, b] = pending_.back();
            pending_.pop_back();
            const auto left = edges_.find(edge_key(a, b));
            const auto right = edges_.find(edge_key(b, a));
            if (left == edges_.end() || right == edges_.end()) {
                continue;
            }
            const std::size_t t1 = left->second;
            const std::size_t t2 = right->second;
            const std::size_t c = third(t1, a, b);
            const std::size_t d = third(t2, b, a);
            if (in_circle(pts_[a], pts_[b], pts_[c], pts_[d]) <= 0) {
                continue;
            }
            unlink(t1);
            unlink(t2);
            tris_[t1] = {a, d, c};
            tris_[t2] = {d, b, c};
            link(t1);
            link(t2);
            pending_.push_back({a, d});
            pending_.push_back({d, b});
            pending_.push_back({b, c});
            pending_.push_back({c, a});
        }
    }

    [[nodiscard]] std::size_t third(std::size_t tri, std::size_t u, std::size_t v) const {
        for (std::size_t w : tris_[tri]) {
            if (w != u && w != v) {
                return w;
            }
        }
        return tris_[tri][0];
    }

    std::span<const Point2> pts_;
    std::vector<std::array<std::size_t, 3>> tris_;
    std::unordered_map<std::uint64_t, std::size_t> edges_;
    std::vector<std::size_t> hull_;
    std::vector<std::pair<std::size_t, std::size_t>> pending_;
};

}  // namespace

int orient(Point2 a, Point2 b, Point2 c) {
    const double l = (a.x - c.x) * (b.y - c.y);
    const double r = (a.y - c.y) * (b.x - c.x);
    const double det = l - r;
    const double bound = kOrientBound * (std::abs(l) + std::abs(r));
    if (det > bound) {
        return 1;
    }
    if (-det > bound) {
        return -1;
    }
    return orient_exact(a, b, c);
}

int in_circle(Point2 a, Point2 b, Point2 c, Point2 d) {
    const double adx = a.x - d.x;
    const double ady = a.y - d.y;
    const double bdx = b.x - d.x;
    const double bdy = b.y - d.y;
    const double cdx = c.x - d.x;
    const double cdy = c.y - d.y;

    const double bdxcdy = bdx * cdy;
    const double cdxbdy = cdx * bdy;
    const double alift = adx * adx + ady * ady;
    const double cdxady = cdx * ady;
    const double adxcdy = adx * cdy;
    const double blift = bdx * bdx + bdy * bdy;
    const double adxbdy = adx * bdy;
    const double bdxady = bdx * ady;
    const double clift = cdx * cdx + cdy * cdy;

    const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) +
                       clift * (adxbdy - bdxady);
    const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift +
                             (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                             (std::abs(adxbdy) + std::abs(bdxady)) * clift;
    const double bound = kInCircleBound * permanent;
    if (det > bound) {
        return 1;
    }
    if (-det > bound) {
        return -1;
    }
    return in_circle_exact(a, b, c, d);
}

double signed_area(Point2 a, Point2 b, Point2 c) {
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

TriangulationMesh triangulate(std::span<const Point2> points) {
    for (const auto &p : points) {
        if (!is_finite(p)) {
            throw DegenerateGeometry("triangulation input contains a non-finite point");
        }
    }
    TriangulationMesh mesh;
    mesh.vertices.assign(points.begin(), points.end());
    mesh.triangles = SweepTriangulator(points).run();
    return mesh;
}

bool contains(const TriangulationMesh &mesh, std::size_t triangle, Point2 p) {
    const auto &t = mesh.triangles[triangle];
    const auto &v = mesh.vertices;
    return orient(v[t[0]], v[t[1]], p) >= 0 && orient(v[t[1]], v[t[2]], p) >= 0 &&
           orient(v[t[2]], v[t[0]], p) >= 0;
}

std::optional<std::size_t> locate(const TriangulationMesh &mesh, Point2 p) {
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        if (contains(mesh, i, p)) {
            return i;
        }
    }
    return std::nullopt;
}

TriangleLocator::TriangleLocator(const TriangulationMesh &mesh) : mesh_(mesh) {
    if (mesh.triangles.empty()) {
        cells_.resize(1);
        return;
    }
    Point2 hi = mesh.vertices[mesh.triangles[0][0]];
    lo_ = hi;
    for (const auto &t : mesh.triangles) {
        for (std::size_t v : t) {
            lo_.x = std::min(lo_.x, mesh.vertices[v].x);
            lo_.y = std::min(lo_.y, mesh.vertices[v].y);
            hi.x = std::max(hi.x, mesh.vertices[v].x);
            hi.y = std::max(hi.y, mesh.vertices[v].y);
        }
    }
    const auto side = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(mesh.triangles.size()) / 2.0)));
    nx_ = std::max<std::size_t>(1, side);
    ny_ = nx_;
    inv_w_ = hi.x > lo_.x ? static_cast<double>(nx_) / (hi.x - lo_.x) : 0.0;
    inv_h_ = hi.y > lo_.y ? static_cast<double>(ny_) / (hi.y - lo_.y) : 0.0;
    cells_.resize(nx_ * ny_);

    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        const auto &t = mesh.triangles[i];
        const auto &a = mesh.vertices[t[0]];
        const auto &b = mesh.vertices[t[1]];
        const auto &c = mesh.vertices[t[2]];
        const std::size_t x0 = cell_x(std::min({a.x, b.x, c.x}));
        const std::size_t x1 = cell_x(std::max({a.x, b.x, c.x}));
        const std::size_t y0 = cell_y(std::min({a.y, b.y, c.y}));
        const std::size_t y1 = cell_y(std::max({a.y, b.y, c.y}));
        for (std::size_t y = y0; y <= y1; ++y) {
            for (std::size_t x = x0; x <= x1; ++x) {
                cells_[y * nx_ + x].push_back(i);
            }
        }
    }
}

std::size_t TriangleLocator::cell_x(double x) const {
    const double f = std::floor((x - lo_.x) * inv_w_);
    return f <= 0.0 ? 0 : std::min(nx_ - 1, static_cast<std::size_t>(f));
}

std::size_t TriangleLocator::cell_y(double y) const {
    const double f = std::floor((y - lo_.y) * inv_h_);
    return f <= 0.0 ? 0 : std::min(ny_ - 1, static_cast<std::size_t>(f));
}

std::optional<std::size_t> TriangleLocator::locate(Point2 p) const {
    for (std::size_t i : cells_[cell_y(p.y) * nx_ + cell_x(p.x)]) {
        if (contains(mesh_, i, p)) {
            return i;
        }
    }
    return std::nullopt;
}

bool AffineTransform2D::finite() const {
    return std::all_of(linear.begin(), linear.end(), [](double v) { return std::isfinite(v); }) &&
           is_finite(translation);
}

AffineTransform2D fit_affine(std::span<const Point2> src, std::span<const Point2> dst) {
    if (src.size() != dst.size()) {
        throw LengthMismatch("affine fit needs equally many source and target points");
    }
    if (src.size() < 3) {
        throw TooFewMatches("affine fit needs at least 3 correspondences");
    }
    std::size_t other = 1;
    while (other < src.size() && src[other] == src[0]) {
        ++other;
    }
    bool spread = false;
    for (std::size_t j = other + 1; j < src.size() && !spread; ++j) {
        spread = orient(src[0], src[other], src[j]) != 0;
    }
    if (!spread) {
        throw DegenerateGeometry("affine fit source points are collinear");
    }

    const auto n = static_cast<Eigen::Index>(src.size());
    Point2 ms{};
    Point2 md{};
    for (std::size_t i = 0; i < src.size(); ++i) {
        ms = ms + src[i];
        md = md + dst[i];
    }
    ms = (1.0 / static_cast<double>(n)) * ms;
    md = (1.0 / static_cast<double>(n)) * md;

    Eigen::MatrixXd design(n, 2);
    Eigen::MatrixXd target(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        design(i, 0) = src[k].x - ms.x;
        design(i, 1) = src[k].y - ms.y;
        target(i, 0) = dst[k].x - md.x;
        target(i, 1) = dst[k].y - md.y;
    }
    const Eigen::MatrixXd sol = design.colPivHouseholderQr().solve(target);

    AffineTransform2D t;
    t.linear = {sol(0, 0), sol(1, 0), sol(0, 1), sol(1, 1)};
    t.translation = {md.x - (t.linear[0] * ms.x + t.linear[1] * ms.y),
                     md.y - (t.linear[2] * ms.x + t.linear[3] * ms.y)};
    if (!t.finite()) {
        throw DegenerateGeometry("affine fit produced non-finite coefficients");
    }
    return t;
}

}  // namespace histreg::geometry
