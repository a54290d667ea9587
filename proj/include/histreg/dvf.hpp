#pragma once

#include <cstddef>
#include <vector>

#include "histreg/geometry.hpp"
#include "histreg/types.hpp"

// Dense deformation fields from sparse matches via thin-plate splines.
//
// The spline models the pull displacement in the fixed frame: at each
// control point dst_i it takes the value src_i - dst_i, so sampling the
// moving image at p + d(p) aligns it with the fixed image.
namespace histreg::dvf {

inline constexpr std::size_t kMaxControlPoints = 10000;
inline constexpr double kDuplicateRadius = 1e-6;
inline constexpr double kConditionLimit = 1e12;
inline constexpr double kFallbackLambda = 1e-3;

struct TpsModel {
    std::vector<Point2> controls;
    std::vector<DisplacementVector> weights;
    // Affine part of the position map p -> p + d(p).
    geometry::AffineTransform2D affine;
    double lambda = 0.0;
    double condition_estimate = 0.0;
};

// U(r) = r^2 log r with U(0) = 0.
double tps_kernel(double r);

// Throws TooFewMatches (< 3 distinct targets) or DegenerateGeometry (collinear).
// The system is solved in centered coordinates scaled to unit radius. With
// lambda == 0 an ill-conditioned system (estimate > 1e12) is refit with
// lambda = 1e-3.
TpsModel tps_fit(const MatchSet &matches, double lambda = 0.0);

DisplacementVector tps_eval(const TpsModel &model, Point2 p);

// Evaluates the model at every pixel center (x, y), row-major.
DvfRaster rasterize(const TpsModel &model, ImageMeta meta);

// Bending energy of the kernel part, sum over both components of w^T K w
// (up to the constant 8*pi).
double bending_energy(const TpsModel &model);

// Jacobian determinant of p -> p + field(p) by finite differences.
struct JacobianStats {
    double min = 0.0;
    double mean = 0.0;
    double negative_fraction = 0.0;
};
JacobianStats jacobian_stats(const DvfRaster &raster);

}  // namespace histreg::dvf
