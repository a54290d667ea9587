#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "histreg/types.hpp"

namespace histreg::geometry {

// Sign of the orientation determinant of (a, b, c): +1 counter-clockwise,
// -1 clockwise, 0 collinear. Exact for all finite double inputs.
int orient(Point2 a, Point2 b, Point2 c);

// Sign of the in-circle determinant: +1 when d lies strictly inside the
// circumcircle of the counter-clockwise triangle (a, b, c). Exact.
int in_circle(Point2 a, Point2 b, Point2 c, Point2 d);

double signed_area(Point2 a, Point2 b, Point2 c);

inline constexpr double kMinTriangleArea = 1e-9;

struct TriangulationMesh {
    std::vector<Point2> vertices;
    // Counter-clockwise vertex index triples.
    std::vector<std::array<std::size_t, 3>> triangles;
};

// Delaunay triangulation by lexicographic sweep with Lawson flips. Vertices
// are inserted in (x, y, index) order, which fixes the choice among
// co-circular configurations. Exact duplicates are kept as isolated vertices.
// Triangles with area <= kMinTriangleArea are dropped.
// Throws DegenerateGeometry when fewer than 3 distinct, non-collinear points exist.
TriangulationMesh triangulate(std::span<const Point2> points);

// Closed-triangle containment.
bool contains(const TriangulationMesh &mesh, std::size_t triangle, Point2 p);

// Lowest-index triangle containing p (boundary inclusive).
std::optional<std::size_t> locate(const TriangulationMesh &mesh, Point2 p);

// Bucket grid over triangle bounding boxes; same answers as locate().
class TriangleLocator {
public:
    explicit TriangleLocator(const TriangulationMesh &mesh);
    [[nodiscard]] std::optional<std::size_t> locate(Point2 p) const;

private:
    [[nodiscard]] std::size_t cell_x(double x) const;
    [[nodiscard]] std::size_t cell_y(double y) const;

    const TriangulationMesh &mesh_;
    Point2 lo_{};
    double inv_w_ = 0.0;
    double inv_h_ = 0.0;
    std::size_t nx_ = 1;
    std::size_t ny_ = 1;
    std::vector<std::vector<std::size_t>> cells_;
};

struct AffineTransform2D {
    // p -> A p + b with A = [[a00, a01], [a10, a11]].
    std::array<double, 4> linear{1.0, 0.0, 0.0, 1.0};
    Point2 translation{};

    [[nodiscard]] Point2 apply(Point2 p) const {
        return {linear[0] * p.x + linear[1] * p.y + translation.x,
                linear[2] * p.x + linear[3] * p.y + translation.y};
    }
    [[nodiscard]] bool finite() const;

    static AffineTransform2D identity() { return {}; }
};

// Least-squares affine map taking src[i] to dst[i]; exact for 3 points.
// Throws DegenerateGeometry for collinear src, TooFewMatches for < 3 points.
AffineTransform2D fit_affine(std::span<const Point2> src, std::span<const Point2> dst);

}  // namespace histreg::geometry
