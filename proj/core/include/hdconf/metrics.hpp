#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hdconf/conformal.hpp"

namespace hdconf {

/// (ub - lb) + (2 / alpha)(lb - y) 1{y < lb} + (2 / alpha)(y - ub) 1{y > ub}.
[[nodiscard]] double interval_score(double lower, double upper, double actual, double alpha);

/// Inclusion and two-sided exceedance counts over every (origin, age) term.
struct CoverageCounts {
    std::size_t inside = 0;
    std::size_t below = 0;
    std::size_t above = 0;

    [[nodiscard]] std::size_t total() const noexcept { return inside + below + above; }
    [[nodiscard]] double ecp() const;
    [[nodiscard]] double exceedance() const;
};

/// intervals[i] is scored against actuals[i]; every pair must have the same length.
[[nodiscard]] CoverageCounts coverage_counts(std::span<const IntervalSurface> intervals,
                                             std::span<const std::vector<double>> actuals);

[[nodiscard]] double ecp(std::span<const IntervalSurface> intervals,
                         std::span<const std::vector<double>> actuals);

/// |(1 - ecp) - alpha|.
[[nodiscard]] double cpd(std::span<const IntervalSurface> intervals,
                         std::span<const std::vector<double>> actuals, double alpha);

[[nodiscard]] double mean_interval_score(std::span<const IntervalSurface> intervals,
                                         std::span<const std::vector<double>> actuals, double alpha);

}  // namespace hdconf
