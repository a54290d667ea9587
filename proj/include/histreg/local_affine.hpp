#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "histreg/geometry.hpp"
#include "histreg/rng.hpp"
#include "histreg/types.hpp"

// Local-consistency filter. Each round samples matches evenly over the
// moving image, triangulates the sampled source points, fits one affine map
// per triangle from its three vertex matches, and charges every covered
// match the distance between its target and the covering triangle's
// prediction.
namespace histreg::local_affine {

inline constexpr std::size_t kMinMatches = 8;

struct LocalAffineConfig {
    std::size_t rounds = 10;
    double sample_fraction = 0.25;
    // Per-round mean deviation threshold in pixels. Unset: 0.02 x diagonal of
    // `image`, or of the match bounding box when no image size is known.
    std::optional<double> deviation_threshold;
    std::optional<ImageMeta> image;
    std::uint64_t seed = 0;

    void validate() const;
    [[nodiscard]] double resolve_threshold(const MatchSet &matches) const;
};

struct LocalScore {
    double deviation = 0.0;  // summed over covering rounds
    std::size_t coverage = 0;

    [[nodiscard]] double mean_deviation() const {
        return coverage == 0 ? 0.0 : deviation / static_cast<double>(coverage);
    }
};

// Stratified sample of max(8, ceil(fraction * n)) distinct indices over a
// ceil(sqrt(k)) x ceil(sqrt(k)) grid of the source bounding box. Sorted.
std::vector<std::size_t> sample_points(const MatchSet &matches, double fraction, Rng &rng);

struct NotCovered {};

// Prediction of match.src's target under the lowest-index covering triangle.
std::variant<Point2, NotCovered> predict(const MatchPair &match,
                                         const geometry::TriangulationMesh &mesh,
                                         const std::vector<geometry::AffineTransform2D> &per_triangle);

// Per-triangle exact affine fits from the three vertex correspondences.
// `vertex_targets[i]` is the target of mesh.vertices[i].
std::vector<geometry::AffineTransform2D> fit_triangles(const geometry::TriangulationMesh &mesh,
                                                       const std::vector<Point2> &vertex_targets);

std::vector<LocalScore> score_matches(const MatchSet &matches, const LocalAffineConfig &cfg);

// Flags covered matches whose mean per-round deviation exceeds the threshold.
// Mask scores hold that mean deviation (pixels). Fewer than 8 matches: no flags.
OutlierMask filter_local(const MatchSet &matches, const LocalAffineConfig &cfg);

}  // namespace histreg::local_affine
