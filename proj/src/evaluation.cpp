#include "histreg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "histreg/errors.hpp"

namespace histreg::evaluation {
namespace {

double mean_of(const std::vector<double> &values) {
    if (values.empty()) {
        return 0.0;
    }
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double max_of(const std::vector<double> &values) {
    return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

std::array<double, 2> sample_field(const DvfRaster &field, Point2 p) {
    const double max_x = static_cast<double>(field.meta.width - 1);
    const double max_y = static_cast<double>(field.meta.height - 1);
    const double px = std::clamp(p.x, 0.0, max_x);
    const double py = std::clamp(p.y, 0.0, max_y);
    const auto x0 = static_cast<std::uint32_t>(std::floor(px));
    const auto y0 = static_cast<std::uint32_t>(std::floor(py));
    const std::uint32_t x1 = std::min(x0 + 1, field.meta.width - 1);
    const std::uint32_t y1 = std::min(y0 + 1, field.meta.height - 1);
    const double fx = px - x0;
    const double fy = py - y0;
    std::array<double, 2> out{};
    for (std::size_t c = 0; c < 2; ++c) {
        const double top = (1.0 - fx) * field.at(x0, y0)[c] + fx * field.at(x1, y0)[c];
        const double bottom = (1.0 - fx) * field.at(x0, y1)[c] + fx * field.at(x1, y1)[c];
        out[c] = (1.0 - fy) * top + fy * bottom;
    }
    return out;
}

}  // namespace

double rtre(Point2 predicted, Point2 truth, ImageMeta meta, ErrorMode mode) {
    const double d = distance(predicted, truth);
    const double tre = mode == ErrorMode::Squared ? d * d : d;
    return tre / meta.diagonal();
}

LandmarkSet transfer_landmarks(const LandmarkSet &landmarks, const DvfRaster &field) {
    if (field.field.empty()) {
        throw SizeMismatch("cannot transfer landmarks through an empty field");
    }
    LandmarkSet out;
    out.reserve(landmarks.size());
    for (const auto &p : landmarks) {
        const auto d = sample_field(field, p);
        out.push_back({p.x + d[0], p.y + d[1]});
    }
    return out;
}

double median_of(std::vector<double> values) {
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Summary summarize(const std::vector<double> &values) {
    return {mean_of(values), median_of(values), max_of(values)};
}

double EvaluationReport::aggregate(const std::string &name) const {
    for (std::size_t i = 0; i < kAggregateNames.size(); ++i) {
        if (name == kAggregateNames[i]) {
            return aggregates[i];
        }
    }
    throw DataError("unknown aggregate '" + name + "'");
}

EvaluationReport evaluate(const std::vector<PairInput> &pairs, ErrorMode mode) {
    if (pairs.empty()) {
        throw NoPairs();
    }
    EvaluationReport report;
    report.pairs.reserve(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto &in = pairs[k];
        if (in.predicted.size() != in.truth.size()) {
            throw LengthMismatch("pair " + std::to_string(k) + ": " +
                                 std::to_string(in.predicted.size()) + " predicted vs " +
                                 std::to_string(in.truth.size()) + " ground-truth landmarks");
        }
        if (!in.meta.valid()) {
            throw DataError("pair " + std::to_string(k) + ": image dimensions must be positive");
        }
        PairEvaluation pe;
        pe.rtre.reserve(in.truth.size());
        for (std::size_t i = 0; i < in.truth.size(); ++i) {
            pe.rtre.push_back(rtre(in.predicted[i], in.truth[i], in.meta, mode));
        }
        pe.summary = summarize(pe.rtre);
        report.pairs.push_back(std::move(pe));
    }

    std::vector<double> averages;
    std::vector<double> medians;
    for (const auto &p : report.pairs) {
        averages.push_back(p.summary.average);
        medians.push_back(p.summary.median);
    }
    report.aggregates = {mean_of(averages),   mean_of(medians), median_of(averages),
                         median_of(medians),  max_of(averages), max_of(medians)};
    return report;
}

}  // namespace histreg::evaluation
