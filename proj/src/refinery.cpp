#include "histreg/refinery.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace histreg::refinery {
namespace {

std::int64_t cell_index(double v, double size) {
    return static_cast<std::int64_t>(std::floor(v / size));
}

std::uint64_t cell_key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^ (static_cast<std::uint64_t>(cy) & 0xFFFFFFFFULL);
}

}  // namespace

ScoreSummary summarize(std::vector<double> values) {
    if (values.empty()) {
        return {};
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const double median =
        n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    return {values.front(), median, values.back()};
}

MatchSet merge(const std::vector<MatchSet> &sets, double dedup_radius) {
    MatchSet out;
    std::size_t total = 0;
    for (const auto &s : sets) {
        total += s.size();
    }
    out.reserve(total);

    // Kept pairs bucketed by src cell; a duplicate's src lies in a neighboring cell.
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
    for (const auto &set : sets) {
        for (std::size_t i = 0; i < set.size(); ++i) {
            const auto &pair = set[i];
            if (dedup_radius > 0.0) {
                const auto cx = cell_index(pair.src.x, dedup_radius);
                const auto cy = cell_index(pair.src.y, dedup_radius);
                bool duplicate = false;
                for (std::int64_t dy = -1; dy <= 1 && !duplicate; ++dy) {
                    for (std::int64_t dx = -1; dx <= 1 && !duplicate; ++dx) {
                        const auto it = buckets.find(cell_key(cx + dx, cy + dy));
                        if (it == buckets.end()) {
                            continue;
                        }
                        for (std::size_t k : it->second) {
                            if (distance(out[k].src, pair.src) <= dedup_radius &&
                                distance(out[k].dst, pair.dst) <= dedup_radius) {
                                duplicate = true;
                                break;
                            }
                        }
                    }
                }
                if (duplicate) {
                    continue;
                }
                buckets[cell_key(cx, cy)].push_back(out.size());
            }
            out.add(pair, set.provenance(i));
        }
    }
    return out;
}

RefineResult refine(const std::vector<MatchSet> &sets, const iforest::ForestConfig &forest_cfg,
                    const local_affine::LocalAffineConfig &local_cfg, double dedup_radius) {
    forest_cfg.validate();
    local_cfg.validate();

    RefineResult result;
    auto &report = result.report;
    for (const auto &s : sets) {
        report.input_counts.push_back(s.size());
    }
    const MatchSet merged = merge(sets, dedup_radius);
    report.merged = merged.size();

    // Global stage.
    report.global_skipped = merged.size() < 3;
    const auto global = iforest::detect_outliers(merged, forest_cfg);
    report.flagged_global = global.flagged_count();
    if (!report.global_skipped) {
        report.global_scores = summarize(global.scores);
    }
    const MatchSet after_global = merged.select_unflagged(global.flags);
    std::vector<std::size_t> alive_global;
    for (std::size_t i = 0; i < merged.size(); ++i) {
        if (!global.flags[i]) {
            alive_global.push_back(i);
        }
    }

    // Local stage.
    report.local_skipped = after_global.size() < local_affine::kMinMatches;
    const auto local_mask = local_affine::filter_local(after_global, local_cfg);
    report.flagged_local = local_mask.flagged_count();
    if (!report.local_skipped) {
        report.local_scores = summarize(local_mask.scores);
    }
    result.matches = after_global.select_unflagged(local_mask.flags);
    for (std::size_t i = 0; i < after_global.size(); ++i) {
        if (!local_mask.flags[i]) {
            result.kept.push_back(alive_global[i]);
        }
    }
    report.surviving = result.matches.size();
    return result;
}

}  // namespace histreg::refinery
