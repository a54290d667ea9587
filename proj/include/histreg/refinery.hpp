#pragma once

#include <map>
#include <string>
#include <vector>

#include "histreg/iforest.hpp"
#include "histreg/local_affine.hpp"
#include "histreg/types.hpp"

namespace histreg::refinery {

struct ScoreSummary {
    double min = 0.0;
    double median = 0.0;
    double max = 0.0;
};

ScoreSummary summarize(std::vector<double> values);

struct RefineReport {
    std::vector<std::size_t> input_counts;  // per input set, in argument order
    std::size_t merged = 0;                 // after concatenation + dedup
    std::size_t flagged_global = 0;
    std::size_t flagged_local = 0;
    std::size_t surviving = 0;
    bool global_skipped = false;
    bool local_skipped = false;
    ScoreSummary global_scores;  // isolation-forest anomaly scores
    ScoreSummary local_scores;   // mean per-round deviation, pixels
};

inline constexpr double kDefaultDedupRadius = 1.0;

// Concatenates in order, dropping any pair whose src and dst both lie within
// `dedup_radius` of an already-kept pair. A radius of 0 disables dedup.
MatchSet merge(const std::vector<MatchSet> &sets, double dedup_radius = kDefaultDedupRadius);

struct RefineResult {
    MatchSet matches;
    RefineReport report;
    // Indices into the merged set that survived, ascending.
    std::vector<std::size_t> kept;
};

// merge -> isolation forest -> local affine filter.
RefineResult refine(const std::vector<MatchSet> &sets, const iforest::ForestConfig &forest_cfg,
                    const local_affine::LocalAffineConfig &local_cfg,
                    double dedup_radius = kDefaultDedupRadius);

}  // namespace histreg::refinery
