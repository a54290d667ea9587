#include "histreg/types.hpp"

#include <algorithm>
#include <cmath>

namespace histreg {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

void MatchSet::add(MatchPair pair, std::string provenance) {
    pairs_.push_back(pair);
    provenance_.push_back(std::move(provenance));
}

void MatchSet::reserve(std::size_t n) {
    pairs_.reserve(n);
    provenance_.reserve(n);
}

MatchSet MatchSet::select_unflagged(const std::vector<bool> &flags) const {
    MatchSet out;
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
        if (i >= flags.size() || !flags[i]) {
            out.add(pairs_[i], provenance_[i]);
        }
    }
    return out;
}

double ImageMeta::diagonal() const {
    return std::hypot(static_cast<double>(width), static_cast<double>(height));
}

ImageBuffer::ImageBuffer(ImageMeta m, int ch, std::uint8_t fill)
    : meta(m), channels(ch), pixels(m.pixel_count() * static_cast<std::size_t>(ch), fill) {}

std::size_t OutlierMask::flagged_count() const {
    return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
}

}  // namespace histreg
