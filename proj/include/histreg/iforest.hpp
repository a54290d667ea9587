#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "histreg/rng.hpp"
#include "histreg/types.hpp"

// Global-consistency filter: an isolation forest over the match displacement
// set. Matches whose displacement is easy to isolate get scores near 1.
namespace histreg::iforest {

struct ForestConfig {
    std::size_t subsample_size = 256;  // psi, clamped to the number of samples
    std::size_t tree_count = 100;
    double score_threshold = 0.6;
    // When set, flags the ceil(q * n) highest-scoring matches instead of
    // thresholding; q in (0, 1).
    std::optional<double> contamination;
    std::uint64_t seed = 0;

    void validate() const;
};

// ceil(log2(psi)) for psi >= 1.
std::size_t height_limit_for(std::size_t subsample_size);

std::vector<DisplacementVector> displacements(const MatchSet &matches);

// Average path length of an unsuccessful BST search over n items.
double c_factor(std::size_t n);

class IsolationTree {
public:
    enum class Attribute : std::uint8_t { Dx = 0, Dy = 1 };

    struct Node {
        bool external = true;
        Attribute attribute = Attribute::Dx;
        double split_value = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::size_t size = 0;  // samples that terminated here (external nodes)
        std::size_t depth = 0;
    };

    IsolationTree() = default;
    explicit IsolationTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

    [[nodiscard]] const Node &root() const { return nodes_.front(); }
    [[nodiscard]] const Node &node(std::int32_t i) const { return nodes_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] const std::vector<Node> &nodes() const { return nodes_; }
    [[nodiscard]] std::size_t max_depth() const;

    friend bool operator==(const IsolationTree &a, const IsolationTree &b);

private:
    std::vector<Node> nodes_;
};

inline double attribute_of(DisplacementVector s, IsolationTree::Attribute a) {
    return a == IsolationTree::Attribute::Dx ? s.dx : s.dy;
}

// Recursively partitions `samples` until the height limit is reached, a single
// sample remains, or all remaining samples are identical (both attributes
// spread by at most 1e-9 relative).
IsolationTree build_tree(std::span<const DisplacementVector> samples, std::size_t height_limit,
                         Rng &rng);

double path_length(DisplacementVector s, const IsolationTree &tree, std::size_t e = 0);

// 2^(-expected_path / c(n)).
double anomaly_score(double expected_path, std::size_t n);

class IsolationForest {
public:
    // Trains cfg.tree_count trees, each on a subsample drawn from the canonical
    // (dx, dy, index) ordering of `samples` with its own derived RNG stream.
    IsolationForest(std::span<const DisplacementVector> samples, const ForestConfig &cfg);

    [[nodiscard]] double expected_path(DisplacementVector s) const;
    [[nodiscard]] double score(DisplacementVector s) const;
    [[nodiscard]] std::size_t subsample_size() const { return subsample_size_; }
    [[nodiscard]] const std::vector<IsolationTree> &trees() const { return trees_; }

private:
    std::size_t subsample_size_ = 0;
    std::vector<IsolationTree> trees_;
};

// Fewer than 3 matches: nothing flagged, scores 0.
OutlierMask detect_outliers(std::span<const DisplacementVector> samples, const ForestConfig &cfg);
OutlierMask detect_outliers(const MatchSet &matches, const ForestConfig &cfg);

}  // namespace histreg::iforest
