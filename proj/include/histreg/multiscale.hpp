#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "histreg/iforest.hpp"
#include "histreg/local_affine.hpp"
#include "histreg/types.hpp"

// Crop-and-zoom matching over an image pair. Level 0 shrinks each whole image
// into one crop; every further level halves the scale and re-crops around the
// current match estimates, until native resolution is reached. The matcher
// itself is external and only ever sees crop pairs.
namespace histreg::multiscale {

inline constexpr std::uint32_t kCropSize = 256;

struct CropWindow {
    Point2 origin;                  // full-res top-left
    double scale = 1.0;             // full-res pixels per crop pixel
    std::uint32_t size = kCropSize; // crop side, crop pixels
};

Point2 to_local(Point2 p, const CropWindow &win);
Point2 to_global(Point2 p, const CropWindow &win);

// Scale at a level: max(w, h) / size at level 0, then halved per level and
// floored at 1 (native resolution).
double level_scale(ImageMeta meta, std::size_t level, std::uint32_t size = kCropSize);

// Number of levels to run for a pair: up to and including the first level at
// which both images are at scale <= 1.
std::size_t level_count(ImageMeta a, ImageMeta b, std::uint32_t size = kCropSize);

struct WindowPair {
    CropWindow a;
    CropWindow b;
};

// Level 0: whole images from the origin. Level >= 1: windows centered on
// estimate.src (image A) and estimate.dst (image B), clamped inside the images.
WindowPair schedule(const MatchPair &estimate, std::size_t level, ImageMeta img_a, ImageMeta img_b,
                    std::uint32_t size = kCropSize);

// Crop extent in crop pixels: every crop pixel maps inside the image.
ImageMeta crop_extent(const CropWindow &win, ImageMeta image);

// Resamples the window with the bilinear sampler.
ImageBuffer extract_crop(const ImageBuffer &image, const CropWindow &win);

struct CropRequest {
    const ImageBuffer &crop_a;
    const ImageBuffer &crop_b;
    CropWindow window_a;
    CropWindow window_b;
    std::size_t level = 0;
};

// Returns matches in crop coordinates (src in crop A, dst in crop B), or
// nullopt when the matcher failed.
class Matcher {
public:
    virtual ~Matcher() = default;
    virtual std::optional<MatchSet> match(const CropRequest &request) = 0;
};

// Runs a shell command built from a template with {a}, {b} and {out}
// replaced by the crop image paths and the CSV output path.
class ProcessMatcher : public Matcher {
public:
    explicit ProcessMatcher(std::string command_template);
    std::optional<MatchSet> match(const CropRequest &request) override;

    [[nodiscard]] std::string expand(const std::string &a, const std::string &b,
                                     const std::string &out) const;

private:
    std::string template_;
    std::size_t invocation_ = 0;
};

struct PyramidConfig {
    iforest::ForestConfig forest;
    local_affine::LocalAffineConfig local;
    double dedup_radius = 1.0;
    std::size_t max_windows_per_level = 16;
    std::uint32_t crop_size = kCropSize;
    std::optional<std::size_t> max_levels;
};

struct LevelLog {
    std::size_t level = 0;
    std::size_t windows = 0;
    std::size_t returned = 0;
    std::size_t carried_out = 0;
    bool skipped = false;
};

struct PyramidResult {
    MatchSet matches;
    std::vector<LevelLog> levels;
};

// Throws MatcherUnavailable when level 0 fails. A failure at a later level
// drops that level and carries the previous matches forward.
PyramidResult run_pyramid(const ImageBuffer &img_a, const ImageBuffer &img_b, Matcher &matcher,
                          const PyramidConfig &cfg);

}  // namespace histreg::multiscale
