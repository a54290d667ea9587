#include "histreg/warp.hpp"

#include <algorithm>
#include <cmath>

#include "histreg/errors.hpp"
#include "histreg/parallel.hpp"

namespace histreg::warp {
namespace {

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

void draw_disc(ImageBuffer &img, Point2 center, std::array<std::uint8_t, 3> color) {
    const double r = kLandmarkRadius;
    const auto w = static_cast<std::int64_t>(img.meta.width);
    const auto h = static_cast<std::int64_t>(img.meta.height);
    const auto x0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(center.x - r)));
    const auto x1 = std::min<std::int64_t>(w - 1, static_cast<std::int64_t>(std::floor(center.x + r)));
    const auto y0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(center.y - r)));
    const auto y1 = std::min<std::int64_t>(h - 1, static_cast<std::int64_t>(std::floor(center.y + r)));
    for (std::int64_t y = y0; y <= y1; ++y) {
        for (std::int64_t x = x0; x <= x1; ++x) {
            const double dx = static_cast<double>(x) - center.x;
            const double dy = static_cast<double>(y) - center.y;
            if (dx * dx + dy * dy <= r * r) {
                for (int c = 0; c < 3; ++c) {
                    img.at(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), c) = color[c];
                }
            }
        }
    }
}

}  // namespace

std::array<double, 3> bilinear_sample_exact(const ImageBuffer &img, Point2 p) {
    const double max_x = static_cast<double>(img.meta.width - 1);
    const double max_y = static_cast<double>(img.meta.height - 1);
    const double px = std::isfinite(p.x) ? std::clamp(p.x, 0.0, max_x) : 0.0;
    const double py = std::isfinite(p.y) ? std::clamp(p.y, 0.0, max_y) : 0.0;
    const auto x0 = static_cast<std::uint32_t>(std::floor(px));
    const auto y0 = static_cast<std::uint32_t>(std::floor(py));
    const std::uint32_t x1 = std::min(x0 + 1, img.meta.width - 1);
    const std::uint32_t y1 = std::min(y0 + 1, img.meta.height - 1);
    const double fx = px - x0;
    const double fy = py - y0;

    std::array<double, 3> out{};
    for (int c = 0; c < img.channels; ++c) {
        const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
        const double bottom = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
        out[static_cast<std::size_t>(c)] = (1.0 - fy) * top + fy * bottom;
    }
    return out;
}

std::array<std::uint8_t, 3> bilinear_sample(const ImageBuffer &img, Point2 p) {
    const auto v = bilinear_sample_exact(img, p);
    return {to_byte(v[0]), to_byte(v[1]), to_byte(v[2])};
}

ImageBuffer warp(const ImageBuffer &moving, const DvfRaster &field) {
    if (field.field.empty() || !field.meta.valid()) {
        throw SizeMismatch("cannot warp with an empty displacement field");
    }
    if (!moving.meta.valid()) {
        throw SizeMismatch("cannot warp an empty image");
    }
    ImageBuffer out(field.meta, moving.channels);
    parallel_for(field.meta.height, [&](std::size_t row) {
        const auto y = static_cast<std::uint32_t>(row);
        for (std::uint32_t x = 0; x < field.meta.width; ++x) {
            const auto &d = field.at(x, y);
            const auto v = bilinear_sample(
                moving, {static_cast<double>(x) + d[0], static_cast<double>(y) + d[1]});
            for (int c = 0; c < moving.channels; ++c) {
                out.at(x, y, c) = v[static_cast<std::size_t>(c)];
            }
        }
    });
    return out;
}

ImageBuffer checkerboard(const ImageBuffer &a, const ImageBuffer &b, std::uint32_t tile) {
    if (a.meta != b.meta || a.channels != b.channels) {
        throw SizeMismatch("checkerboard inputs differ in size or channel count");
    }
    if (tile == 0) {
        throw DataError("checkerboard tile must be at least 1 pixel");
    }
    ImageBuffer out = a;
    for (std::uint32_t y = 0; y < a.meta.height; ++y) {
        for (std::uint32_t x = 0; x < a.meta.width; ++x) {
            if ((x / tile + y / tile) % 2 == 1) {
                for (int c = 0; c < a.channels; ++c) {
                    out.at(x, y, c) = b.at(x, y, c);
                }
            }
        }
    }
    return out;
}

ImageBuffer to_rgb(const ImageBuffer &img) {
    if (img.channels == 3) {
        return img;
    }
    ImageBuffer out(img.meta, 3);
    for (std::size_t i = 0; i < img.meta.pixel_count(); ++i) {
        std::fill_n(out.pixels.begin() + static_cast<std::ptrdiff_t>(3 * i), 3, img.pixels[i]);
    }
    return out;
}

ImageBuffer overlay_landmarks(const ImageBuffer &img, const LandmarkSet &predicted,
                              const LandmarkSet &truth) {
    ImageBuffer out = to_rgb(img);
    for (const auto &p : truth) {
        draw_disc(out, p, {0, 0, 255});
    }
    for (const auto &p : predicted) {
        draw_disc(out, p, {255, 0, 0});
    }
    return out;
}

}  // namespace histreg::warp
