#include "histreg/dvf.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "histreg/errors.hpp"
#include "histreg/parallel.hpp"

namespace histreg::dvf {
namespace {

struct Control {
    Point2 position;
    DisplacementVector displacement;
};

// Groups targets closer than kDuplicateRadius, averaging their displacements.
// Clusters are ordered by first occurrence.
std::vector<Control> collapse_duplicates(const MatchSet &matches) {
    const std::size_t n = matches.size();
    std::vector<std::size_t> by_x(n);
    std::iota(by_x.begin(), by_x.end(), std::size_t{0});
    std::sort(by_x.begin(), by_x.end(), [&](std::size_t a, std::size_t b) {
        return matches[a].dst.x < matches[b].dst.x || (matches[a].dst.x == matches[b].dst.x && a < b);
    });
    std::vector<std::size_t> rank(n);
    for (std::size_t r = 0; r < n; ++r) {
        rank[by_x[r]] = r;
    }

    constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);
    std::vector<std::size_t> cluster(n, kUnassigned);
    std::vector<Control> sums;
    for (std::size_t i = 0; i < n; ++i) {
        if (cluster[i] != kUnassigned) {
            continue;
        }
        const std::size_t id = sums.size();
        cluster[i] = id;
        const Point2 anchor = matches[i].dst;
        Control c{anchor, {matches[i].src.x - anchor.x, matches[i].src.y - anchor.y}};
        std::size_t count = 1;
        for (std::size_t r = rank[i] + 1; r < n; ++r) {
            const std::size_t j = by_x[r];
            if (matches[j].dst.x - anchor.x >= kDuplicateRadius) {
                break;
            }
            if (cluster[j] == kUnassigned && distance(matches[j].dst, anchor) < kDuplicateRadius) {
                cluster[j] = id;
                c.displacement.dx += matches[j].src.x - matches[j].dst.x;
                c.displacement.dy += matches[j].src.y - matches[j].dst.y;
                ++count;
            }
        }
        // Scan left neighbors as well; sorted order may place them before i.
        for (std::size_t r = rank[i]; r-- > 0;) {
            const std::size_t j = by_x[r];
            if (anchor.x - matches[j].dst.x >= kDuplicateRadius) {
                break;
            }
            if (cluster[j] == kUnassigned && distance(matches[j].dst, anchor) < kDuplicateRadius) {
                cluster[j] = id;
                c.displacement.dx += matches[j].src.x - matches[j].dst.x;
                c.displacement.dy += matches[j].src.y - matches[j].dst.y;
                ++count;
            }
        }
        c.displacement.dx /= static_cast<double>(count);
        c.displacement.dy /= static_cast<double>(count);
        sums.push_back(c);
    }
    return sums;
}

struct Solved {
    Eigen::MatrixXd solution;
    double condition = 0.0;
};

// Solves in coordinates centered on `center` and divided by `scale`. The
// kernel then differs from the unscaled one by a factor 1/scale^2 plus a
// term r^2 log(scale) that the side conditions fold into the constant.
Solved solve_system(const std::vector<Control> &controls, Point2 center, double scale,
                    double lambda) {
    const auto n = static_cast<Eigen::Index>(controls.size());
    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(n + 3, n + 3);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 3, 2);
    std::vector<Point2> q(controls.size());
    for (std::size_t i = 0; i < controls.size(); ++i) {
        q[i] = (1.0 / scale) * (controls[i].position - center);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double u = tps_kernel(distance(q[ui], q[static_cast<std::size_t>(j)]));
            system(i, j) = u;
            system(j, i) = u;
        }
        system(i, i) = lambda / (scale * scale);
        system(i, n) = 1.0;
        system(i, n + 1) = q[ui].x;
        system(i, n + 2) = q[ui].y;
        system(n, i) = 1.0;
        system(n + 1, i) = q[ui].x;
        system(n + 2, i) = q[ui].y;
        rhs(i, 0) = controls[ui].displacement.dx;
        rhs(i, 1) = controls[ui].displacement.dy;
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    const double rcond = lu.rcond();
    Solved out{lu.solve(rhs), rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity()};

    // Back to pixel units: w = w' / s^2, A = A' / s, and the constant absorbs
    // -log(s) / s^2 * sum_j w'_j |q_j|^2 (times s^2 from |c_j - center|^2).
    const double log_s = std::log(scale);
    for (int c = 0; c < 2; ++c) {
        double fold = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto &qj = q[static_cast<std::size_t>(j)];
            fold += out.solution(j, c) * (qj.x * qj.x + qj.y * qj.y);
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            out.solution(j, c) /= scale * scale;
        }
        out.solution(n, c) -= log_s * fold;
        out.solution(n + 1, c) /= scale;
        out.solution(n + 2, c) /= scale;
    }
    return out;
}

}  // namespace

double tps_kernel(double r) { return r <= 0.0 ? 0.0 : r * r * std::log(r); }

TpsModel tps_fit(const MatchSet &matches, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw DataError("TPS regularization must be a finite non-negative number");
    }
    if (matches.size() < 3) {
        throw TooFewMatches("TPS needs at least 3 matches, got " + std::to_string(matches.size()));
    }
    auto controls = collapse_duplicates(matches);
    if (controls.size() < 3) {
        throw TooFewMatches("TPS needs at least 3 distinct target points");
    }
    if (controls.size() > kMaxControlPoints) {
        std::clog << "warning: " << controls.size() << " TPS control points, subsampling to "
                  << kMaxControlPoints << '\n';
        std::vector<Control> kept;
        kept.reserve(kMaxControlPoints);
        for (std::size_t k = 0; k < kMaxControlPoints; ++k) {
            kept.push_back(controls[k * controls.size() / kMaxControlPoints]);
        }
        controls = std::move(kept);
    }

    std::vector<Point2> positions;
    positions.reserve(controls.size());
    Point2 center{};
    for (const auto &c : controls) {
        positions.push_back(c.position);
        center = center + c.position;
    }
    center = (1.0 / static_cast<double>(controls.size())) * center;
    double scale = 0.0;
    for (const auto &p : positions) {
        scale = std::max(scale, distance(p, center));
    }
    {
        bool spread = false;
        for (std::size_t j = 2; j < positions.size() && !spread; ++j) {
            spread = geometry::orient(positions[0], positions[1], positions[j]) != 0;
        }
        if (!spread) {
            throw DegenerateGeometry("TPS target points are collinear");
        }
    }

    Solved solved = solve_system(controls, center, scale, lambda);
    double used_lambda = lambda;
    if (lambda == 0.0 && solved.condition > kConditionLimit) {
        std::clog << "warning: TPS system condition estimate " << solved.condition
                  << " exceeds 1e12, refitting with lambda = " << kFallbackLambda << '\n';
        used_lambda = kFallbackLambda;
        solved = solve_system(controls, center, scale, used_lambda);
    }
    if (!solved.solution.allFinite()) {
        throw DegenerateGeometry("TPS system is singular");
    }

    TpsModel model;
    model.lambda = used_lambda;
    model.condition_estimate = solved.condition;
    model.controls = std::move(positions);
    const auto n = static_cast<Eigen::Index>(controls.size());
    model.weights.reserve(controls.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        model.weights.push_back({solved.solution(i, 0), solved.solution(i, 1)});
    }
    // Displacement affine part a0 + A (p - center); position map adds identity.
    const double ax0 = solved.solution(n, 0);
    const double axx = solved.solution(n + 1, 0);
    const double axy = solved.solution(n + 2, 0);
    const double ay0 = solved.solution(n, 1);
    const double ayx = solved.solution(n + 1, 1);
    const double ayy = solved.solution(n + 2, 1);
    model.affine.linear = {1.0 + axx, axy, ayx, 1.0 + ayy};
    model.affine.translation = {ax0 - axx * center.x - axy * center.y,
                                ay0 - ayx * center.x - ayy * center.y};
    return model;
}

DisplacementVector tps_eval(const TpsModel &model, Point2 p) {
    const auto &a = model.affine;
    double dx = (a.linear[0] - 1.0) * p.x + a.linear[1] * p.y + a.translation.x;
    double dy = a.linear[2] * p.x + (a.linear[3] - 1.0) * p.y + a.translation.y;
    for (std::size_t i = 0; i < model.controls.size(); ++i) {
        const double ex = p.x - model.controls[i].x;
        const double ey = p.y - model.controls[i].y;
        const double r2 = ex * ex + ey * ey;
        const double u = r2 > 0.0 ? 0.5 * r2 * std::log(r2) : 0.0;
        dx += model.weights[i].dx * u;
        dy += model.weights[i].dy * u;
    }
    return {dx, dy};
}

DvfRaster rasterize(const TpsModel &model, ImageMeta meta) {
    if (!meta.valid()) {
        throw DataError("raster dimensions must be positive");
    }
    DvfRaster raster(meta);
    parallel_for(meta.height, [&](std::size_t y) {
        for (std::uint32_t x = 0; x < meta.width; ++x) {
            const auto d = tps_eval(model, {static_cast<double>(x), static_cast<double>(y)});
            raster.at(x, static_cast<std::uint32_t>(y)) = {static_cast<float>(d.dx),
                                                           static_cast<float>(d.dy)};
        }
    });
    return raster;
}

double bending_energy(const TpsModel &model) {
    double energy = 0.0;
    const std::size_t n = model.controls.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double u = tps_kernel(distance(model.controls[i], model.controls[j]));
            energy += u * (model.weights[i].dx * model.weights[j].dx +
                           model.weights[i].dy * model.weights[j].dy);
        }
    }
    return energy;
}

JacobianStats jacobian_stats(const DvfRaster &raster) {
    const auto w = raster.meta.width;
    const auto h = raster.meta.height;
    JacobianStats stats;
    if (raster.field.empty()) {
        return stats;
    }
    auto derivative = [](float before, float after, double step) {
        return step > 0.0 ? (static_cast<double>(after) - before) / step : 0.0;
    };
    double sum = 0.0;
    std::size_t negative = 0;
    stats.min = std::numeric_limits<double>::infinity();
    for (std::uint32_t y = 0; y < h; ++y) {
        const std::uint32_t y0 = y > 0 ? y - 1 : y;
        const std::uint32_t y1 = y + 1 < h ? y + 1 : y;
        for (std::uint32_t x = 0; x < w; ++x) {
            const std::uint32_t x0 = x > 0 ? x - 1 : x;
            const std::uint32_t x1 = x + 1 < w ? x + 1 : x;
            const double sx = x1 - x0;
            const double sy = y1 - y0;
            const double dudx = derivative(raster.at(x0, y)[0], raster.at(x1, y)[0], sx);
            const double dudy = derivative(raster.at(x, y0)[0], raster.at(x, y1)[0], sy);
            const double dvdx = derivative(raster.at(x0, y)[1], raster.at(x1, y)[1], sx);
            const double dvdy = derivative(raster.at(x, y0)[1], raster.at(x, y1)[1], sy);
            const double det = (1.0 + dudx) * (1.0 + dvdy) - dudy * dvdx;
            stats.min = std::min(stats.min, det);
            sum += det;
            if (det < 0.0) {
                ++negative;
            }
        }
    }
    const auto count = static_cast<double>(raster.field.size());
    stats.mean = sum / count;
    stats.negative_fraction = static_cast<double>(negative) / count;
    return stats;
}

}  // namespace histreg::dvf
