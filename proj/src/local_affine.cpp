#include "histreg/local_affine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "histreg/errors.hpp"
#include "histreg/parallel.hpp"

namespace histreg::local_affine {
namespace {

constexpr double kDiagonalFraction = 0.02;
// Neighbour triples considered for a sampled vertex: C(12, 3) = 220 at most.
constexpr std::size_t kMaxLink = 12;

// Candidate with the least summed distance to the others; commutes with
// rigid motions, unlike a per-axis median. Near-ties go to the lowest index
// so rounding cannot flip the choice.
Point2 medoid(const std::vector<Point2> &pts) {
    std::vector<double> sums(pts.size(), 0.0);
    for (std::size_t a = 0; a < pts.size(); ++a) {
        for (std::size_t b = a + 1; b < pts.size(); ++b) {
            const double d = distance(pts[a], pts[b]);
            sums[a] += d;
            sums[b] += d;
        }
    }
    const double least = *std::min_element(sums.begin(), sums.end());
    const double slack = 1e-9 * std::max(1.0, least);
    for (std::size_t a = 0; a < pts.size(); ++a) {
        if (sums[a] <= least + slack) {
            return pts[a];
        }
    }
    return pts.front();
}

struct RoundResult {
    std::vector<double> deviation;
    std::vector<bool> covered;
};

RoundResult run_round(const MatchSet &matches, const LocalAffineConfig &cfg, std::size_t round) {
    RoundResult out{std::vector<double>(matches.size(), 0.0),
                    std::vector<bool>(matches.size(), false)};
    Rng rng(derive_seed(cfg.seed, round));
    const auto picked = sample_points(matches, cfg.sample_fraction, rng);

    std::vector<Point2> vertices;
    std::vector<Point2> targets;
    vertices.reserve(picked.size());
    targets.reserve(picked.size());
    for (std::size_t i : picked) {
        vertices.push_back(matches[i].src);
        targets.push_back(matches[i].dst);
    }

    geometry::TriangulationMesh mesh;
    try {
        mesh = geometry::triangulate(vertices);
    } catch (const DegenerateGeometry &) {
        return out;  // nothing covered this round
    }
    const auto affines = fit_triangles(mesh, targets);
    const geometry::TriangleLocator locator(mesh);

    for (std::size_t i = 0; i < matches.size(); ++i) {
        const auto tri = locator.locate(matches[i].src);
        if (!tri) {
            continue;
        }
        const Point2 predicted = affines[*tri].apply(matches[i].src);
        out.deviation[i] = distance(matches[i].dst, predicted);
        out.covered[i] = true;
    }

    // A sampled match fits its own triangles exactly, so it is instead judged
    // against its Delaunay neighbours: the medoid of the predictions made by
    // every non-degenerate triple of them.
    std::vector<std::vector<std::size_t>> neighbours(picked.size());
    for (const auto &t : mesh.triangles) {
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                if (a != b) {
                    neighbours[t[a]].push_back(t[b]);
                }
            }
        }
    }
    std::vector<Point2> candidates;
    for (std::size_t v = 0; v < picked.size(); ++v) {
        auto &link = neighbours[v];
        std::sort(link.begin(), link.end());
        link.erase(std::unique(link.begin(), link.end()), link.end());
        const std::size_t i = picked[v];
        out.covered[i] = false;
        out.deviation[i] = 0.0;
        candidates.clear();
        const std::size_t m = std::min(link.size(), kMaxLink);
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = a + 1; b < m; ++b) {
                for (std::size_t c = b + 1; c < m; ++c) {
                    const Point2 s3[3] = {vertices[link[a]], vertices[link[b]], vertices[link[c]]};
                    if (std::abs(geometry::signed_area(s3[0], s3[1], s3[2])) <= geometry::kMinTriangleArea) {
                        continue;
                    }
                    const Point2 d3[3] = {targets[link[a]], targets[link[b]], targets[link[c]]};
                    candidates.push_back(geometry::fit_affine(s3, d3).apply(matches[i].src));
                }
            }
        }
        if (candidates.empty()) {
            continue;
        }
        out.deviation[i] = distance(matches[i].dst, medoid(candidates));
        out.covered[i] = true;
    }
    return out;
}

}  // namespace

void LocalAffineConfig::validate() const {
    if (rounds < 1) {
        throw DataError("local affine filter needs at least one round");
    }
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) {
        throw DataError("local affine sample fraction must lie in (0, 1]");
    }
    if (deviation_threshold && !(*deviation_threshold > 0.0)) {
        throw DataError("local affine deviation threshold must be positive");
    }
}

double LocalAffineConfig::resolve_threshold(const MatchSet &matches) const {
    if (deviation_threshold) {
        return *deviation_threshold;
    }
    if (image) {
        return kDiagonalFraction * image->diagonal();
    }
    if (matches.empty()) {
        return kDiagonalFraction;
    }
    Point2 lo = matches[0].src;
    Point2 hi = lo;
    for (const auto &p : matches.pairs()) {
        for (const Point2 q : {p.src, p.dst}) {
            lo.x = std::min(lo.x, q.x);
            lo.y = std::min(lo.y, q.y);
            hi.x = std::max(hi.x, q.x);
            hi.y = std::max(hi.y, q.y);
        }
    }
    const double diag = std::hypot(hi.x - lo.x, hi.y - lo.y);
    return kDiagonalFraction * std::max(diag, 1.0);
}

std::vector<std::size_t> sample_points(const MatchSet &matches, double fraction, Rng &rng) {
    const std::size_t n = matches.size();
    if (n < kMinMatches) {
        throw TooFewMatches("local affine sampling needs at least 8 matches, got " +
                            std::to_string(n));
    }
    const auto wanted = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    const std::size_t k = std::min(n, std::max(kMinMatches, wanted));
    const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(k))));

    Point2 lo = matches[0].src;
    Point2 hi = lo;
    for (const auto &p : matches.pairs()) {
        lo.x = std::min(lo.x, p.src.x);
        lo.y = std::min(lo.y, p.src.y);
        hi.x = std::max(hi.x, p.src.x);
        hi.y = std::max(hi.y, p.src.y);
    }
    // The lattice is shifted by a random fraction of a cell per draw and
    // wrapped, so cell membership (and which points sit alone) varies
    // between rounds.
    const double shift_x = rng.uniform();
    const double shift_y = rng.uniform();
    auto cell_of = [&](double v, double l, double h, double shift) -> std::size_t {
        if (h <= l) {
            return 0;
        }
        const double f = std::floor((v - l) / (h - l) * static_cast<double>(side) + shift);
        return static_cast<std::size_t>(std::max(0.0, f)) % side;
    };

    std::vector<std::vector<std::size_t>> cells(side * side);
    for (std::size_t i = 0; i < n; ++i) {
        const auto &s = matches[i].src;
        cells[cell_of(s.y, lo.y, hi.y, shift_y) * side + cell_of(s.x, lo.x, hi.x, shift_x)].push_back(i);
    }

    std::vector<std::size_t> chosen;
    chosen.reserve(k);
    while (chosen.size() < k) {
        std::vector<std::size_t> open;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!cells[c].empty()) {
                open.push_back(c);
            }
        }
        // Visit non-empty cells in random order, one draw per cell per pass.
        for (std::size_t j = 0; j < open.size() && chosen.size() < k; ++j) {
            const std::size_t swap_with = j + rng.below(open.size() - j);
            std::swap(open[j], open[swap_with]);
            auto &bucket = cells[open[j]];
            const std::size_t at = rng.below(bucket.size());
            chosen.push_back(bucket[at]);
            bucket.erase(bucket.begin() + static_cast<std::ptrdiff_t>(at));
        }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

std::vector<geometry::AffineTransform2D> fit_triangles(const geometry::TriangulationMesh &mesh,
                                                       const std::vector<Point2> &vertex_targets) {
    std::vector<geometry::AffineTransform2D> out;
    out.reserve(mesh.triangles.size());
    for (const auto &t : mesh.triangles) {
        const Point2 src[3] = {mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]};
        const Point2 dst[3] = {vertex_targets[t[0]], vertex_targets[t[1]], vertex_targets[t[2]]};
        out.push_back(geometry::fit_affine(src, dst));
    }
    return out;
}

std::variant<Point2, NotCovered> predict(
    const MatchPair &match, const geometry::TriangulationMesh &mesh,
    const std::vector<geometry::AffineTransform2D> &per_triangle) {
    const auto tri = geometry::locate(mesh, match.src);
    if (!tri) {
        return NotCovered{};
    }
    return per_triangle[*tri].apply(match.src);
}

std::vector<LocalScore> score_matches(const MatchSet &matches, const LocalAffineConfig &cfg) {
    cfg.validate();
    if (matches.size() < kMinMatches) {
        throw TooFewMatches("local affine scoring needs at least 8 matches, got " +
                            std::to_string(matches.size()));
    }
    std::vector<RoundResult> rounds(cfg.rounds);
    parallel_for(cfg.rounds, [&](std::size_t r) { rounds[r] = run_round(matches, cfg, r); });

    std::vector<LocalScore> scores(matches.size());
    for (const auto &round : rounds) {
        for (std::size_t i = 0; i < matches.size(); ++i) {
            if (round.covered[i]) {
                scores[i].deviation += round.deviation[i];
                ++scores[i].coverage;
            }
        }
    }
    return scores;
}

OutlierMask filter_local(const MatchSet &matches, const LocalAffineConfig &cfg) {
    cfg.validate();
    OutlierMask mask;
    mask.flags.assign(matches.size(), false);
    mask.scores.assign(matches.size(), 0.0);
    if (matches.size() < kMinMatches) {
        return mask;
    }
    const double threshold = cfg.resolve_threshold(matches);
    const auto scores = score_matches(matches, cfg);
    for (std::size_t i = 0; i < matches.size(); ++i) {
        mask.scores[i] = scores[i].mean_deviation();
        mask.flags[i] = scores[i].coverage >= 1 && scores[i].mean_deviation() > threshold;
    }
    return mask;
}

}  // namespace histreg::local_affine
