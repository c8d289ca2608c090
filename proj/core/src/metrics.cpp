#include "hdconf/metrics.hpp"

#include <cmath>
#include <string>

#include "hdconf/error.hpp"

namespace hdconf {

namespace {

void check_pairs(std::span<const IntervalSurface> intervals, std::span<const std::vector<double>> actuals) {
    if (intervals.size() != actuals.size()) {
        throw ArgumentError("metrics: " + std::to_string(intervals.size()) + " intervals but " +
                            std::to_string(actuals.size()) + " actual curves");
    }
    std::size_t terms = 0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const auto& iv = intervals[i];
        if (iv.lower.size() != actuals[i].size() || iv.upper.size() != actuals[i].size()) {
            throw ArgumentError("metrics: interval " + std::to_string(i) +
                                " does not match its actual curve length");
        }
        terms += actuals[i].size();
    }
    if (terms == 0) throw ArgumentError("metrics: no terms to evaluate");
}

}  // namespace

double interval_score(double lower, double upper, double actual, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("interval_score: alpha must lie in (0, 1)");
    if (lower > upper) throw ArgumentError("interval_score: lower bound exceeds upper bound");
    double score = upper - lower;
    if (actual < lower) score += 2.0 / alpha * (lower - actual);
    if (actual > upper) score += 2.0 / alpha * (actual - upper);
    return score;
}

double CoverageCounts::ecp() const {
    if (total() == 0) throw ArgumentError("ecp: no terms to evaluate");
    return static_cast<double>(inside) / static_cast<double>(total());
}

double CoverageCounts::exceedance() const {
    if (total() == 0) throw ArgumentError("exceedance: no terms to evaluate");
    return static_cast<double>(below + above) / static_cast<double>(total());
}

CoverageCounts coverage_counts(std::span<const IntervalSurface> intervals,
                               std::span<const std::vector<double>> actuals) {
    check_pairs(intervals, actuals);
    CoverageCounts counts;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        for (std::size_t j = 0; j < actuals[i].size(); ++j) {
            const double y = actuals[i][j];
            if (y < intervals[i].lower[j]) {
                ++counts.below;
            } else if (y > intervals[i].upper[j]) {
                ++counts.above;
            } else {
                ++counts.inside;
            }
        }
    }
    return counts;
}

double ecp(std::span<const IntervalSurface> intervals, std::span<const std::vector<double>> actuals) {
    return coverage_counts(intervals, actuals).ecp();
}

double cpd(std::span<const IntervalSurface> intervals, std::span<const std::vector<double>> actuals,
           double alpha) {
    return std::abs(coverage_counts(intervals, actuals).exceedance() - alpha);
}

double mean_interval_score(std::span<const IntervalSurface> intervals,
                           std::span<const std::vector<double>> actuals, double alpha) {
    check_pairs(intervals, actuals);
    double sum = 0.0;
    std::size_t terms = 0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        for (std::size_t j = 0; j < actuals[i].size(); ++j) {
            sum += interval_score(intervals[i].lower[j], intervals[i].upper[j], actuals[i][j], alpha);
            ++terms;
        }
    }
    return sum / static_cast<double>(terms);
}

}  // namespace hdconf
