#include "histreg/multiscale.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>

#include "histreg/errors.hpp"
#include "histreg/io.hpp"
#include "histreg/refinery.hpp"
#include "histreg/warp.hpp"

namespace histreg::multiscale {
namespace {

double clamp_origin(double centered, double extent, double image_size) {
    const double hi = std::max(0.0, image_size - extent);
    return std::clamp(centered, 0.0, hi);
}

CropWindow centered_window(Point2 center, double scale, ImageMeta meta, std::uint32_t size) {
    const double extent = static_cast<double>(size) * scale;
    return {{clamp_origin(center.x - extent / 2.0, extent, meta.width),
             clamp_origin(center.y - extent / 2.0, extent, meta.height)},
            scale,
            size};
}

std::string shell_quote(const std::string &s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

void replace_all(std::string &s, const std::string &token, const std::string &value) {
    std::size_t at = 0;
    while ((at = s.find(token, at)) != std::string::npos) {
        s.replace(at, token.size(), value);
        at += value.size();
    }
}

// Greedy farthest-point choice of window centers among the carried matches.
std::vector<std::size_t> pick_window_centers(const MatchSet &carried, std::size_t max_windows,
                                             double min_spacing) {
    std::vector<std::size_t> picked;
    if (carried.empty() || max_windows == 0) {
        return picked;
    }
    std::vector<double> nearest(carried.size(), std::numeric_limits<double>::infinity());
    std::size_t next = 0;
    while (picked.size() < max_windows) {
        picked.push_back(next);
        double best = -1.0;
        for (std::size_t i = 0; i < carried.size(); ++i) {
            nearest[i] = std::min(nearest[i], distance(carried[i].src, carried[next].src));
            if (nearest[i] > best) {
                best = nearest[i];
                next = i;
            }
        }
        if (best < min_spacing) {
            break;
        }
    }
    return picked;
}

}  // namespace

Point2 to_local(Point2 p, const CropWindow &win) {
    return {(p.x - win.origin.x) / win.scale, (p.y - win.origin.y) / win.scale};
}

Point2 to_global(Point2 p, const CropWindow &win) {
    return {win.origin.x + p.x * win.scale, win.origin.y + p.y * win.scale};
}

double level_scale(ImageMeta meta, std::size_t level, std::uint32_t size) {
    const double base = static_cast<double>(std::max(meta.width, meta.height)) / size;
    if (level == 0) {
        return base;
    }
    return std::max(1.0, base / std::exp2(static_cast<double>(level)));
}

std::size_t level_count(ImageMeta a, ImageMeta b, std::uint32_t size) {
    std::size_t level = 0;
    while (level_scale(a, level, size) > 1.0 || level_scale(b, level, size) > 1.0) {
        ++level;
    }
    return level + 1;
}

WindowPair schedule(const MatchPair &estimate, std::size_t level, ImageMeta img_a, ImageMeta img_b,
                    std::uint32_t size) {
    const double sa = level_scale(img_a, level, size);
    const double sb = level_scale(img_b, level, size);
    if (level == 0) {
        return {{{0.0, 0.0}, sa, size}, {{0.0, 0.0}, sb, size}};
    }
    return {centered_window(estimate.src, sa, img_a, size),
            centered_window(estimate.dst, sb, img_b, size)};
}

ImageMeta crop_extent(const CropWindow &win, ImageMeta image) {
    auto extent = [&](double origin, std::uint32_t full) -> std::uint32_t {
        const double room = (static_cast<double>(full) - 1.0 - origin) / win.scale;
        const double n = std::floor(room + 1e-9) + 1.0;
        return static_cast<std::uint32_t>(std::clamp(n, 1.0, static_cast<double>(win.size)));
    };
    return {extent(win.origin.x, image.width), extent(win.origin.y, image.height)};
}

ImageBuffer extract_crop(const ImageBuffer &image, const CropWindow &win) {
    const ImageMeta meta = crop_extent(win, image.meta);
    ImageBuffer crop(meta, image.channels);
    for (std::uint32_t v = 0; v < meta.height; ++v) {
        for (std::uint32_t u = 0; u < meta.width; ++u) {
            const auto px = warp::bilinear_sample(
                image, to_global({static_cast<double>(u), static_cast<double>(v)}, win));
            for (int c = 0; c < image.channels; ++c) {
                crop.at(u, v, c) = px[static_cast<std::size_t>(c)];
            }
        }
    }
    return crop;
}

ProcessMatcher::ProcessMatcher(std::string command_template)
    : template_(std::move(command_template)) {}

std::string ProcessMatcher::expand(const std::string &a, const std::string &b,
                                   const std::string &out) const {
    std::string cmd = template_;
    replace_all(cmd, "{a}", shell_quote(a));
    replace_all(cmd, "{b}", shell_quote(b));
    replace_all(cmd, "{out}", shell_quote(out));
    return cmd;
}

std::optional<MatchSet> ProcessMatcher::match(const CropRequest &request) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() /
                         ("histreg-" + std::to_string(::getpid()) + "-" + std::to_string(invocation_++));
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        std::clog << "warning: cannot create matcher scratch directory " << dir << '\n';
        return std::nullopt;
    }
    const fs::path a = dir / "a.png";
    const fs::path b = dir / "b.png";
    const fs::path out = dir / "matches.csv";

    std::optional<MatchSet> result;
    try {
        io::write_image(request.crop_a, a);
        io::write_image(request.crop_b, b);
        const std::string cmd = expand(a.string(), b.string(), out.string());
        const int status = std::system(cmd.c_str());
        if (status != 0) {
            std::clog << "warning: matcher exited with status " << status << " at level "
                      << request.level << '\n';
        } else if (!fs::exists(out)) {
            std::clog << "warning: matcher produced no output at level " << request.level << '\n';
        } else {
            result = io::read_match_csv(out);
        }
    } catch (const Error &e) {
        std::clog << "warning: matcher output rejected: " << e.what() << '\n';
        result.reset();
    }
    fs::remove_all(dir, ec);
    return result;
}

PyramidResult run_pyramid(const ImageBuffer &img_a, const ImageBuffer &img_b, Matcher &matcher,
                          const PyramidConfig &cfg) {
    std::size_t levels = level_count(img_a.meta, img_b.meta, cfg.crop_size);
    if (cfg.max_levels) {
        levels = std::min(levels, std::max<std::size_t>(1, *cfg.max_levels));
    }
    local_affine::LocalAffineConfig local = cfg.local;
    if (!local.image && !local.deviation_threshold) {
        local.image = img_b.meta;
    }

    PyramidResult result;
    MatchSet carried;
    for (std::size_t level = 0; level < levels; ++level) {
        LevelLog log{level, 0, 0, 0, false};

        std::vector<WindowPair> windows;
        if (level == 0) {
            windows.push_back(schedule({}, 0, img_a.meta, img_b.meta, cfg.crop_size));
        } else {
            const double scale = level_scale(img_a.meta, level, cfg.crop_size);
            const double spacing = static_cast<double>(cfg.crop_size) * scale / 4.0;
            for (std::size_t i : pick_window_centers(carried, cfg.max_windows_per_level, spacing)) {
                windows.push_back(schedule(carried[i], level, img_a.meta, img_b.meta, cfg.crop_size));
            }
        }
        if (windows.empty()) {
            log.carried_out = carried.size();
            result.levels.push_back(log);
            break;
        }
        log.windows = windows.size();

        MatchSet found;
        bool failed = false;
        for (const auto &w : windows) {
            const ImageBuffer crop_a = extract_crop(img_a, w.a);
            const ImageBuffer crop_b = extract_crop(img_b, w.b);
            const auto local_matches = matcher.match({crop_a, crop_b, w.a, w.b, level});
            if (!local_matches) {
                failed = true;
                break;
            }
            for (std::size_t i = 0; i < local_matches->size(); ++i) {
                const auto &m = (*local_matches)[i];
                const MatchPair global{to_global(m.src, w.a), to_global(m.dst, w.b)};
                if (is_finite(global.src) && is_finite(global.dst)) {
                    found.add(global, local_matches->provenance(i));
                }
            }
        }
        if (failed) {
            if (level == 0) {
                throw MatcherUnavailable("matcher failed on the coarsest level");
            }
            std::clog << "warning: skipping level " << level << " after matcher failure\n";
            log.skipped = true;
            log.carried_out = carried.size();
            result.levels.push_back(log);
            continue;
        }
        log.returned = found.size();

        iforest::ForestConfig forest = cfg.forest;
        forest.seed = derive_seed(cfg.forest.seed, level);
        local_affine::LocalAffineConfig level_local = local;
        level_local.seed = derive_seed(local.seed, level);
        // Finer levels come first so their matches win deduplication.
        carried = refinery::refine({found, carried}, forest, level_local, cfg.dedup_radius).matches;
        log.carried_out = carried.size();
        result.levels.push_back(log);
    }
    result.matches = std::move(carried);
    return result;
}

}  // namespace histreg::multiscale
