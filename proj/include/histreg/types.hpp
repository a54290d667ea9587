#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace histreg {

// Full-resolution pixel coordinates. X is the column, Y the row, origin at
// the top-left pixel center.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2 &, const Point2 &) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }

double distance(Point2 a, Point2 b);
bool is_finite(Point2 p);

// One candidate correspondence: src lies in the moving image, dst in the fixed image.
struct MatchPair {
    Point2 src;
    Point2 dst;

    friend bool operator==(const MatchPair &, const MatchPair &) = default;
};

inline constexpr const char *kUnknownProvenance = "unknown";

// Ordered correspondences with a provenance tag per pair.
class MatchSet {
public:
    MatchSet() = default;

    void add(MatchPair pair, std::string provenance = kUnknownProvenance);
    void reserve(std::size_t n);

    [[nodiscard]] std::size_t size() const { return pairs_.size(); }
    [[nodiscard]] bool empty() const { return pairs_.empty(); }

    [[nodiscard]] const MatchPair &operator[](std::size_t i) const { return pairs_[i]; }
    [[nodiscard]] const std::string &provenance(std::size_t i) const { return provenance_[i]; }
    [[nodiscard]] const std::vector<MatchPair> &pairs() const { return pairs_; }
    [[nodiscard]] const std::vector<std::string> &provenances() const { return provenance_; }

    // Pairs whose mask entry is false, in order.
    [[nodiscard]] MatchSet select_unflagged(const std::vector<bool> &flags) const;

    friend bool operator==(const MatchSet &, const MatchSet &) = default;

private:
    std::vector<MatchPair> pairs_;
    std::vector<std::string> provenance_;
};

struct DisplacementVector {
    double dx = 0.0;
    double dy = 0.0;

    friend bool operator==(const DisplacementVector &, const DisplacementVector &) = default;
};

struct ImageMeta {
    std::uint32_t width = 0;
    std::uint32_t height = 0;

    [[nodiscard]] double diagonal() const;
    [[nodiscard]] std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * height;
    }
    [[nodiscard]] bool valid() const { return width >= 1 && height >= 1; }

    friend bool operator==(const ImageMeta &, const ImageMeta &) = default;
};

// Interleaved, row-major 8-bit samples; 1 (gray) or 3 (RGB) channels.
struct ImageBuffer {
    ImageMeta meta;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    ImageBuffer() = default;
    ImageBuffer(ImageMeta m, int ch, std::uint8_t fill = 0);

    [[nodiscard]] std::uint8_t at(std::uint32_t x, std::uint32_t y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * meta.width + x) * channels + c];
    }
    std::uint8_t &at(std::uint32_t x, std::uint32_t y, int c) {
        return pixels[(static_cast<std::size_t>(y) * meta.width + x) * channels + c];
    }

    friend bool operator==(const ImageBuffer &, const ImageBuffer &) = default;
};

// Dense pull-convention displacement field: output(p) = input(p + field(p)).
struct DvfRaster {
    ImageMeta meta;
    std::vector<std::array<float, 2>> field;

    DvfRaster() = default;
    explicit DvfRaster(ImageMeta m) : meta(m), field(m.pixel_count(), {0.0F, 0.0F}) {}

    [[nodiscard]] const std::array<float, 2> &at(std::uint32_t x, std::uint32_t y) const {
        return field[static_cast<std::size_t>(y) * meta.width + x];
    }
    std::array<float, 2> &at(std::uint32_t x, std::uint32_t y) {
        return field[static_cast<std::size_t>(y) * meta.width + x];
    }

    friend bool operator==(const DvfRaster &, const DvfRaster &) = default;
};

// Landmarks indexed 0..n-1 in row order.
using LandmarkSet = std::vector<Point2>;

// Per-match outlier decision; true = outlier.
struct OutlierMask {
    std::vector<bool> flags;
    std::vector<double> scores;

    [[nodiscard]] std::size_t size() const { return flags.size(); }
    [[nodiscard]] std::size_t flagged_count() const;
};

}  // namespace histreg
