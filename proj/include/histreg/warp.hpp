#pragma once

#include <array>
#include <cstdint>

#include "histreg/types.hpp"

namespace histreg::warp {

// Channel-wise bilinear sample with border clamp, as unrounded values.
std::array<double, 3> bilinear_sample_exact(const ImageBuffer &img, Point2 p);

// Rounded (half away from zero) to 8 bits.
std::array<std::uint8_t, 3> bilinear_sample(const ImageBuffer &img, Point2 p);

// out(x, y) = moving(x + dx, y + dy); output size and channels follow the
// field and the moving image respectively.
ImageBuffer warp(const ImageBuffer &moving, const DvfRaster &field);

// Tiles of `a` where floor(x/tile) + floor(y/tile) is even, `b` elsewhere.
ImageBuffer checkerboard(const ImageBuffer &a, const ImageBuffer &b, std::uint32_t tile);

// Gray images are promoted to RGB before drawing.
ImageBuffer to_rgb(const ImageBuffer &img);

inline constexpr int kLandmarkRadius = 3;

// Predicted landmarks as red discs, ground truth as blue, clipped to the image.
ImageBuffer overlay_landmarks(const ImageBuffer &img, const LandmarkSet &predicted,
                              const LandmarkSet &truth);

}  // namespace histreg::warp
