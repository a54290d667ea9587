#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "histreg/geometry.hpp"
#include "histreg/types.hpp"

// Ground-truth generators: analytic pull fields, contaminated match sets with
// known labels, landmarks, and textured image pairs related by a field.
namespace histreg::synthetic {

enum class FieldKind { Translation, Affine, Sinusoidal, GaussianBump };

FieldKind parse_field_kind(const std::string &name);
std::string to_string(FieldKind kind);

struct FieldParams {
    // translation
    DisplacementVector shift{};
    // affine position map p -> A p + b; displacement is (A - I) p + b
    geometry::AffineTransform2D affine{};
    // sinusoidal: dx = A sin(2 pi y / period + phase_x), dy = A sin(2 pi x / period + phase_y)
    // gaussian bump: d = amplitude * (ux, uy) * exp(-|p - center|^2 / (2 sigma^2))
    double amplitude = 10.0;
    std::optional<double> period;       // default: max(w, h)
    std::optional<Point2> bump_center;  // default: drawn from the seed
    double bump_sigma = 0.0;            // default (0): min(w, h) / 6
};

// Closed-form displacement field, usable at any real position.
class AnalyticField {
public:
    AnalyticField(FieldKind kind, const FieldParams &params, ImageMeta meta, std::uint64_t seed);

    [[nodiscard]] DisplacementVector operator()(Point2 p) const;
    [[nodiscard]] FieldKind kind() const { return kind_; }
    [[nodiscard]] double period() const { return period_; }
    // Sinusoid phases (phase_x, phase_y) drawn from the seed.
    [[nodiscard]] std::array<double, 2> phases() const { return {phase_x_, phase_y_}; }

    // Solves q = p + d(p) for p by fixed-point iteration (valid for
    // contractive fields).
    [[nodiscard]] Point2 invert(Point2 q) const;

private:
    FieldKind kind_;
    FieldParams params_;
    double period_ = 1.0;
    double phase_x_ = 0.0;
    double phase_y_ = 0.0;
    Point2 center_{};
    double sigma_ = 1.0;
};

// Throws DataError when a sinusoidal amplitude exceeds 0.1 * min(w, h).
AnalyticField make_field_closure(ImageMeta meta, FieldKind kind, const FieldParams &params,
                                 std::uint64_t seed);
DvfRaster make_field(ImageMeta meta, const AnalyticField &field);

struct SyntheticMatches {
    MatchSet matches;
    std::vector<bool> outlier;  // true = planted gross error
};

// dst uniform over the image, src = dst + field(dst) + N(0, sigma^2) noise.
// round(outlier_fraction * count) matches get an extra offset of magnitude
// uniform in [m, 2m] and uniform direction.
SyntheticMatches make_matches(const AnalyticField &field, ImageMeta meta, std::size_t count,
                              double noise_sigma, double outlier_fraction,
                              double outlier_magnitude, std::uint64_t seed,
                              const std::string &provenance = "synthetic");

// Uniform positions at least `margin` pixels from the border.
LandmarkSet make_landmarks(ImageMeta meta, std::size_t count, std::uint64_t seed,
                           double margin = 10.0);

// Moving-frame ground truth of fixed-frame landmarks: p + field(p).
LandmarkSet map_landmarks(const LandmarkSet &fixed, const AnalyticField &field);

// Band-limited random texture, evaluable at real positions.
class Texture {
public:
    Texture(std::uint64_t seed, std::size_t components = 48);
    [[nodiscard]] double operator()(Point2 p) const;

private:
    struct Wave {
        double fx, fy, phase, amplitude;
    };
    std::vector<Wave> waves_;
};

struct ImagePair {
    ImageBuffer fixed;
    ImageBuffer moving;
};

// fixed(p) = T(p); moving(q) = T(p) where q = p + field(p), so warping the
// moving image with the field reproduces the fixed image.
ImagePair make_image_pair(ImageMeta meta, const AnalyticField &field, std::uint64_t seed);

}  // namespace histreg::synthetic
