#pragma once

#include <array>
#include <string>
#include <vector>

#include "histreg/types.hpp"

namespace histreg::evaluation {

enum class ErrorMode {
    Euclidean,  // ANHIR TRE
    Squared,    // squared distance, for comparison only
};

// TRE / sqrt(w^2 + h^2).
double rtre(Point2 predicted, Point2 truth, ImageMeta meta, ErrorMode mode = ErrorMode::Euclidean);

// p -> p + field(p), field sampled bilinearly; positions outside the raster
// sample the clamped border.
LandmarkSet transfer_landmarks(const LandmarkSet &landmarks, const DvfRaster &field);

struct Summary {
    double average = 0.0;
    double median = 0.0;
    double max = 0.0;
};

// Median of an even-length list is the mean of the two central values.
double median_of(std::vector<double> values);
Summary summarize(const std::vector<double> &values);

struct PairEvaluation {
    std::vector<double> rtre;
    Summary summary;
};

struct PairInput {
    LandmarkSet predicted;
    LandmarkSet truth;
    ImageMeta meta;
};

// The six cross-pair aggregates, named <outer over pairs>-<inner per pair>.
inline constexpr std::array<const char *, 6> kAggregateNames = {
    "Average-Average", "Average-Median", "Median-Average",
    "Median-Median",   "Max-Average",    "Max-Median",
};

struct EvaluationReport {
    std::vector<PairEvaluation> pairs;
    std::array<double, 6> aggregates{};  // indexed like kAggregateNames

    [[nodiscard]] double aggregate(const std::string &name) const;
};

// Throws NoPairs for an empty list, LengthMismatch for misaligned sets.
EvaluationReport evaluate(const std::vector<PairInput> &pairs,
                          ErrorMode mode = ErrorMode::Euclidean);

}  // namespace histreg::evaluation
