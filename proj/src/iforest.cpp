#include "histreg/iforest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "histreg/errors.hpp"
#include "histreg/parallel.hpp"

namespace histreg::iforest {
namespace {

constexpr double kEulerGamma = 0.5772156649;
constexpr std::size_t kMinSamples = 3;
// Spreads at rounding level (e.g. (x + 7) - x over many x) count as constant.
constexpr double kFlatSpread = 1e-9;

bool flat(double lo, double hi) {
    return hi - lo <= kFlatSpread * std::max({1.0, std::abs(lo), std::abs(hi)});
}

struct Builder {
    std::vector<IsolationTree::Node> nodes;
    std::size_t height_limit;
    Rng &rng;

    std::int32_t grow(std::vector<DisplacementVector> &buf, std::size_t begin, std::size_t end,
                      std::size_t depth) {
        const auto id = static_cast<std::int32_t>(nodes.size());
        nodes.push_back({});
        nodes.back().depth = depth;
        nodes.back().size = end - begin;

        if (depth >= height_limit || end - begin <= 1) {
            return id;
        }

        double lo[2] = {buf[begin].dx, buf[begin].dy};
        double hi[2] = {lo[0], lo[1]};
        for (std::size_t i = begin + 1; i < end; ++i) {
            lo[0] = std::min(lo[0], buf[i].dx);
            hi[0] = std::max(hi[0], buf[i].dx);
            lo[1] = std::min(lo[1], buf[i].dy);
            hi[1] = std::max(hi[1], buf[i].dy);
        }

        auto attr = static_cast<int>(rng.below(2));
        if (flat(lo[attr], hi[attr])) {
            attr = 1 - attr;
            if (flat(lo[attr], hi[attr])) {
                return id;  // all samples identical
            }
        }

        double split = rng.uniform(lo[attr], hi[attr]);
        if (split <= lo[attr]) {
            // No representable value strictly inside; max keeps both sides non-empty.
            split = hi[attr];
        }

        const auto attribute = static_cast<IsolationTree::Attribute>(attr);
        const auto mid = std::partition(buf.begin() + static_cast<std::ptrdiff_t>(begin),
                                        buf.begin() + static_cast<std::ptrdiff_t>(end),
                                        [&](const DisplacementVector &s) {
                                            return attribute_of(s, attribute) < split;
                                        });
        const auto cut = static_cast<std::size_t>(mid - buf.begin());

        const std::int32_t left = grow(buf, begin, cut, depth + 1);
        const std::int32_t right = grow(buf, cut, end, depth + 1);

        auto &node = nodes[static_cast<std::size_t>(id)];
        node.external = false;
        node.attribute = attribute;
        node.split_value = split;
        node.left = left;
        node.right = right;
        node.size = 0;
        return id;
    }
};

}  // namespace

void ForestConfig::validate() const {
    if (tree_count < 1) {
        throw DataError("isolation forest needs at least one tree");
    }
    if (subsample_size < 2) {
        throw DataError("isolation forest subsample size must be at least 2");
    }
    if (!(score_threshold > 0.0 && score_threshold < 1.0)) {
        throw DataError("isolation forest score threshold must lie in (0, 1)");
    }
    if (contamination && !(*contamination > 0.0 && *contamination < 1.0)) {
        throw DataError("contamination must lie in (0, 1)");
    }
}

std::size_t height_limit_for(std::size_t subsample_size) {
    std::size_t l = 0;
    while ((std::size_t{1} << l) < subsample_size) {
        ++l;
    }
    return l;
}

std::vector<DisplacementVector> displacements(const MatchSet &matches) {
    std::vector<DisplacementVector> out;
    out.reserve(matches.size());
    for (const auto &p : matches.pairs()) {
        out.push_back({p.dst.x - p.src.x, p.dst.y - p.src.y});
    }
    return out;
}

double c_factor(std::size_t n) {
    if (n <= 1) {
        return 0.0;
    }
    if (n == 2) {
        return 1.0;
    }
    const double m = static_cast<double>(n - 1);
    const double harmonic = std::log(m) + kEulerGamma;
    return 2.0 * harmonic - 2.0 * m / static_cast<double>(n);
}

std::size_t IsolationTree::max_depth() const {
    std::size_t d = 0;
    for (const auto &n : nodes_) {
        d = std::max(d, n.depth);
    }
    return d;
}

bool operator==(const IsolationTree &a, const IsolationTree &b) {
    return std::equal(a.nodes_.begin(), a.nodes_.end(), b.nodes_.begin(), b.nodes_.end(),
                      [](const IsolationTree::Node &x, const IsolationTree::Node &y) {
                          return x.external == y.external && x.attribute == y.attribute &&
                                 x.split_value == y.split_value && x.left == y.left &&
                                 x.right == y.right && x.size == y.size && x.depth == y.depth;
                      });
}

IsolationTree build_tree(std::span<const DisplacementVector> samples, std::size_t height_limit,
                         Rng &rng) {
    if (samples.empty()) {
        throw DataError("cannot build an isolation tree from zero samples");
    }
    std::vector<DisplacementVector> buf(samples.begin(), samples.end());
    Builder builder{{}, height_limit, rng};
    builder.grow(buf, 0, buf.size(), 0);
    return IsolationTree(std::move(builder.nodes));
}

double path_length(DisplacementVector s, const IsolationTree &tree, std::size_t e) {
    std::int32_t at = 0;
    while (true) {
        const auto &node = tree.node(at);
        if (node.external) {
            return static_cast<double>(e) + c_factor(node.size);
        }
        at = attribute_of(s, node.attribute) < node.split_value ? node.left : node.right;
        ++e;
    }
}

double anomaly_score(double expected_path, std::size_t n) {
    return std::exp2(-expected_path / c_factor(n));
}

IsolationForest::IsolationForest(std::span<const DisplacementVector> samples,
                                 const ForestConfig &cfg) {
    cfg.validate();
    if (samples.empty()) {
        throw DataError("cannot train an isolation forest on zero samples");
    }

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (samples[a].dx != samples[b].dx) {
            return samples[a].dx < samples[b].dx;
        }
        if (samples[a].dy != samples[b].dy) {
            return samples[a].dy < samples[b].dy;
        }
        return a < b;
    });
    std::vector<DisplacementVector> canonical;
    canonical.reserve(samples.size());
    for (std::size_t i : order) {
        canonical.push_back(samples[i]);
    }

    subsample_size_ = std::min(cfg.subsample_size, canonical.size());
    const std::size_t limit = height_limit_for(subsample_size_);

    trees_.resize(cfg.tree_count);
    parallel_for(cfg.tree_count, [&](std::size_t t) {
        Rng rng(derive_seed(cfg.seed, t));
        std::vector<std::size_t> pick(canonical.size());
        std::iota(pick.begin(), pick.end(), std::size_t{0});
        std::vector<DisplacementVector> sub;
        sub.reserve(subsample_size_);
        for (std::size_t k = 0; k < subsample_size_; ++k) {
            const std::size_t j = k + rng.below(pick.size() - k);
            std::swap(pick[k], pick[j]);
            sub.push_back(canonical[pick[k]]);
        }
        trees_[t] = build_tree(sub, limit, rng);
    });
}

double IsolationForest::expected_path(DisplacementVector s) const {
    double sum = 0.0;
    for (const auto &tree : trees_) {
        sum += path_length(s, tree);
    }
    return sum / static_cast<double>(trees_.size());
}

double IsolationForest::score(DisplacementVector s) const {
    return anomaly_score(expected_path(s), subsample_size_);
}

OutlierMask detect_outliers(std::span<const DisplacementVector> samples, const ForestConfig &cfg) {
    OutlierMask mask;
    mask.flags.assign(samples.size(), false);
    mask.scores.assign(samples.size(), 0.0);
    if (samples.size() < kMinSamples) {
        return mask;
    }

    const IsolationForest forest(samples, cfg);
    parallel_for(samples.size(), [&](std::size_t i) { mask.scores[i] = forest.score(samples[i]); });

    if (cfg.contamination) {
        const auto count = static_cast<std::size_t>(
            std::ceil(*cfg.contamination * static_cast<double>(samples.size())));
        std::vector<std::size_t> rank(samples.size());
        std::iota(rank.begin(), rank.end(), std::size_t{0});
        std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
            return mask.scores[a] > mask.scores[b];
        });
        for (std::size_t k = 0; k < std::min(count, rank.size()); ++k) {
            mask.flags[rank[k]] = true;
        }
    } else {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            mask.flags[i] = mask.scores[i] > cfg.score_threshold;
        }
    }
    return mask;
}

OutlierMask detect_outliers(const MatchSet &matches, const ForestConfig &cfg) {
    const auto s = displacements(matches);
    return detect_outliers(std::span<const DisplacementVector>(s), cfg);
}

}  // namespace histreg::iforest
