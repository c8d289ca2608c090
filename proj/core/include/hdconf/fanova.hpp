#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hdconf/curve_array.hpp"
#include "hdconf/panel.hpp"

namespace hdconf {

enum class DecompositionMethod { median_polish, mean };

[[nodiscard]] std::string_view to_string(DecompositionMethod method) noexcept;
[[nodiscard]] DecompositionMethod parse_decomposition_method(std::string_view text);

/// One-way functional ANOVA: value(s,t,u) = grand(u) + row_s(u) + residual(s,t,u).
struct Decomposition {
    PanelAxes axes;
    Scale scale = Scale::log;
    Eigen::VectorXd grand_effect;  // J
    Eigen::MatrixXd row_effects;   // N x J
    CurveArray residuals;          // N x T x J
    DecompositionMethod method = DecompositionMethod::median_polish;
    std::size_t iterations_used = 0;
    double tolerance = 0.0;
    bool converged = true;
};

/// Median of a sample; even sizes take the midpoint of the two central values.
/// Throws ArgumentError on an empty sample.
[[nodiscard]] double median(std::vector<double> sample);

/// Cross-sectional median of curves on a shared grid.
[[nodiscard]] std::vector<double> pointwise_median(std::span<const std::span<const double>> curves);

struct MedianPolishOptions {
    std::size_t max_iter = 50;
    double tol = 1e-8;
};

/// Functional median polish over years within each region.
///
/// Each sweep takes the pointwise median over years in every region, moves it from
/// the residuals into the row effect, then moves the median of the row effects into
/// the grand effect. A sweep whose largest absolute row median is within `tol`
/// terminates the iteration; that confirming sweep is counted in iterations_used.
[[nodiscard]] Decomposition median_polish(const FunctionalPanel& panel,
                                          const MedianPolishOptions& options = {});

/// Mean-based decomposition: grand = overall mean, row = row mean - grand.
[[nodiscard]] Decomposition mean_decompose(const FunctionalPanel& panel);

[[nodiscard]] Decomposition decompose(const FunctionalPanel& panel, DecompositionMethod method,
                                      const MedianPolishOptions& options = {});

/// grand + row + residual cellwise. Throws ArgumentError on inconsistent shapes.
[[nodiscard]] FunctionalPanel reconstruct(const Decomposition& d);

}  // namespace hdconf
