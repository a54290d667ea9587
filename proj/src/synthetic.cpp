#include "histreg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "histreg/errors.hpp"
#include "histreg/parallel.hpp"
#include "histreg/rng.hpp"

namespace histreg::synthetic {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kInverseIterations = 50;

enum Stream : std::uint64_t { kFieldStream = 1, kMatchStream, kLandmarkStream, kTextureStream };

}  // namespace

FieldKind parse_field_kind(const std::string &name) {
    if (name == "translation") {
        return FieldKind::Translation;
    }
    if (name == "affine") {
        return FieldKind::Affine;
    }
    if (name == "sinusoidal") {
        return FieldKind::Sinusoidal;
    }
    if (name == "gaussian-bump") {
        return FieldKind::GaussianBump;
    }
    throw DataError("unknown field kind '" + name + "'");
}

std::string to_string(FieldKind kind) {
    switch (kind) {
        case FieldKind::Translation:
            return "translation";
        case FieldKind::Affine:
            return "affine";
        case FieldKind::Sinusoidal:
            return "sinusoidal";
        case FieldKind::GaussianBump:
            return "gaussian-bump";
    }
    return "unknown";
}

AnalyticField::AnalyticField(FieldKind kind, const FieldParams &params, ImageMeta meta,
                             std::uint64_t seed)
    : kind_(kind), params_(params) {
    Rng rng(derive_seed(seed, kFieldStream));
    period_ = params.period.value_or(static_cast<double>(std::max(meta.width, meta.height)));
    phase_x_ = rng.uniform(0.0, kTwoPi);
    phase_y_ = rng.uniform(0.0, kTwoPi);
    const double w = meta.width;
    const double h = meta.height;
    center_ = params.bump_center.value_or(
        Point2{rng.uniform(0.25 * w, 0.75 * w), rng.uniform(0.25 * h, 0.75 * h)});
    sigma_ = params.bump_sigma > 0.0 ? params.bump_sigma : std::min(w, h) / 6.0;
}

DisplacementVector AnalyticField::operator()(Point2 p) const {
    switch (kind_) {
        case FieldKind::Translation:
            return params_.shift;
        case FieldKind::Affine: {
            const Point2 q = params_.affine.apply(p);
            return {q.x - p.x, q.y - p.y};
        }
        case FieldKind::Sinusoidal:
            return {params_.amplitude * std::sin(kTwoPi * p.y / period_ + phase_x_),
                    params_.amplitude * std::sin(kTwoPi * p.x / period_ + phase_y_)};
        case FieldKind::GaussianBump: {
            const double dx = p.x - center_.x;
            const double dy = p.y - center_.y;
            const double g =
                params_.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_ * sigma_));
            return {g * std::numbers::sqrt2 / 2.0, g * std::numbers::sqrt2 / 2.0};
        }
    }
    return {};
}

Point2 AnalyticField::invert(Point2 q) const {
    Point2 p = q;
    for (int i = 0; i < kInverseIterations; ++i) {
        const auto d = (*this)(p);
        p = {q.x - d.dx, q.y - d.dy};
    }
    return p;
}

AnalyticField make_field_closure(ImageMeta meta, FieldKind kind, const FieldParams &params,
                                 std::uint64_t seed) {
    if (!meta.valid()) {
        throw DataError("field dimensions must be positive");
    }
    if (kind == FieldKind::Sinusoidal &&
        std::abs(params.amplitude) > 0.1 * std::min(meta.width, meta.height)) {
        throw DataError("sinusoidal amplitude exceeds 0.1 * min(width, height)");
    }
    return AnalyticField(kind, params, meta, seed);
}

DvfRaster make_field(ImageMeta meta, const AnalyticField &field) {
    DvfRaster raster(meta);
    parallel_for(meta.height, [&](std::size_t y) {
        for (std::uint32_t x = 0; x < meta.width; ++x) {
            const auto d = field({static_cast<double>(x), static_cast<double>(y)});
            raster.at(x, static_cast<std::uint32_t>(y)) = {static_cast<float>(d.dx),
                                                           static_cast<float>(d.dy)};
        }
    });
    return raster;
}

SyntheticMatches make_matches(const AnalyticField &field, ImageMeta meta, std::size_t count,
                              double noise_sigma, double outlier_fraction,
                              double outlier_magnitude, std::uint64_t seed,
                              const std::string &provenance) {
    if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) {
        throw DataError("outlier fraction must lie in [0, 1)");
    }
    if (!(noise_sigma >= 0.0)) {
        throw DataError("noise sigma must be non-negative");
    }
    Rng rng(derive_seed(seed, kMatchStream));
    SyntheticMatches out;
    out.matches.reserve(count);
    out.outlier.assign(count, false);

    const double max_x = static_cast<double>(meta.width) - 1.0;
    const double max_y = static_cast<double>(meta.height) - 1.0;
    for (std::size_t i = 0; i < count; ++i) {
        const Point2 dst{rng.uniform(0.0, max_x), rng.uniform(0.0, max_y)};
        const auto d = field(dst);
        const double nx = noise_sigma > 0.0 ? noise_sigma * rng.normal() : 0.0;
        const double ny = noise_sigma > 0.0 ? noise_sigma * rng.normal() : 0.0;
        out.matches.add({{dst.x + d.dx + nx, dst.y + d.dy + ny}, dst}, provenance);
    }

    const auto planted =
        static_cast<std::size_t>(std::llround(outlier_fraction * static_cast<double>(count)));
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = 0; k < planted; ++k) {
        std::swap(order[k], order[k + rng.below(count - k)]);
    }
    std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(planted));
    std::sort(chosen.begin(), chosen.end());

    MatchSet corrupted;
    corrupted.reserve(count);
    std::size_t next = 0;
    for (std::size_t i = 0; i < count; ++i) {
        MatchPair pair = out.matches[i];
        if (next < chosen.size() && chosen[next] == i) {
            const double magnitude = rng.uniform(outlier_magnitude, 2.0 * outlier_magnitude);
            const double angle = rng.uniform(0.0, kTwoPi);
            pair.src.x += magnitude * std::cos(angle);
            pair.src.y += magnitude * std::sin(angle);
            out.outlier[i] = true;
            ++next;
        }
        corrupted.add(pair, provenance);
    }
    out.matches = std::move(corrupted);
    return out;
}

LandmarkSet make_landmarks(ImageMeta meta, std::size_t count, std::uint64_t seed, double margin) {
    Rng rng(derive_seed(seed, kLandmarkStream));
    const double max_x = static_cast<double>(meta.width) - 1.0;
    const double max_y = static_cast<double>(meta.height) - 1.0;
    const double mx = std::min(margin, max_x / 2.0);
    const double my = std::min(margin, max_y / 2.0);
    LandmarkSet out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back({rng.uniform(mx, max_x - mx), rng.uniform(my, max_y - my)});
    }
    return out;
}

LandmarkSet map_landmarks(const LandmarkSet &fixed, const AnalyticField &field) {
    LandmarkSet out;
    out.reserve(fixed.size());
    for (const auto &p : fixed) {
        const auto d = field(p);
        out.push_back({p.x + d.dx, p.y + d.dy});
    }
    return out;
}

Texture::Texture(std::uint64_t seed, std::size_t components) {
    Rng rng(derive_seed(seed, kTextureStream));
    waves_.reserve(components);
    for (std::size_t k = 0; k < components; ++k) {
        const double wavelength = rng.uniform(10.0, 80.0);
        const double angle = rng.uniform(0.0, kTwoPi);
        waves_.push_back({kTwoPi * std::cos(angle) / wavelength, kTwoPi * std::sin(angle) / wavelength,
                          rng.uniform(0.0, kTwoPi), rng.uniform(0.5, 1.0)});
    }
}

double Texture::operator()(Point2 p) const {
    double sum = 0.0;
    double norm = 0.0;
    for (const auto &w : waves_) {
        sum += w.amplitude * std::sin(w.fx * p.x + w.fy * p.y + w.phase);
        norm += w.amplitude;
    }
    // Sum of random-phase waves has std ~ sqrt(sum a^2 / 2); map +-3 std to 0..255.
    const double spread = 3.0 * std::sqrt(norm * norm / static_cast<double>(waves_.size()) / 2.0);
    return std::clamp(127.5 + 127.5 * sum / spread, 0.0, 255.0);
}

ImagePair make_image_pair(ImageMeta meta, const AnalyticField &field, std::uint64_t seed) {
    const Texture texture(seed);
    ImagePair pair{ImageBuffer(meta, 1), ImageBuffer(meta, 1)};
    parallel_for(meta.height, [&](std::size_t row) {
        const auto y = static_cast<std::uint32_t>(row);
        for (std::uint32_t x = 0; x < meta.width; ++x) {
            const Point2 p{static_cast<double>(x), static_cast<double>(y)};
            pair.fixed.at(x, y, 0) = static_cast<std::uint8_t>(std::lround(texture(p)));
            pair.moving.at(x, y, 0) = static_cast<std::uint8_t>(std::lround(texture(field.invert(p))));
        }
    });
    return pair;
}

}  // namespace histreg::synthetic
