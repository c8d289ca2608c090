#include "hdconf/fanova.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hdconf/error.hpp"

namespace hdconf {

std::string_view to_string(DecompositionMethod method) noexcept {
    return method == DecompositionMethod::median_polish ? "median_polish" : "mean";
}

DecompositionMethod parse_decomposition_method(std::string_view text) {
    if (text == "median_polish") return DecompositionMethod::median_polish;
    if (text == "mean") return DecompositionMethod::mean;
    throw ArgumentError("unknown decomposition method '" + std::string(text) + "'");
}

double median(std::vector<double> sample) {
    if (sample.empty()) throw ArgumentError("median of an empty sample");
    const std::size_t n = sample.size();
    const auto mid = sample.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(sample.begin(), mid, sample.end());
    const double upper = *mid;
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(sample.begin(), mid);
    return 0.5 * (lower + upper);
}

std::vector<double> pointwise_median(std::span<const std::span<const double>> curves) {
    if (curves.empty()) throw ArgumentError("pointwise_median: no curves");
    const std::size_t j_len = curves.front().size();
    for (const auto& c : curves) {
        if (c.size() != j_len) throw ArgumentError("pointwise_median: curves differ in length");
    }
    std::vector<double> out(j_len);
    std::vector<double> column(curves.size());
    for (std::size_t j = 0; j < j_len; ++j) {
        for (std::size_t k = 0; k < curves.size(); ++k) column[k] = curves[k][j];
        out[j] = median(column);
    }
    return out;
}

namespace {

Decomposition empty_decomposition(const FunctionalPanel& panel, DecompositionMethod method) {
    Decomposition d;
    d.axes = panel.axes();
    d.scale = panel.scale();
    d.method = method;
    const auto n = static_cast<Eigen::Index>(panel.regions());
    const auto j_len = static_cast<Eigen::Index>(panel.ages());
    d.grand_effect = Eigen::VectorXd::Zero(j_len);
    d.row_effects = Eigen::MatrixXd::Zero(n, j_len);
    d.residuals = panel.values();
    return d;
}

}  // namespace

Decomposition median_polish(const FunctionalPanel& panel, const MedianPolishOptions& options) {
    if (options.max_iter < 1) throw ArgumentError("median_polish: max_iter must be at least 1");
    if (!(options.tol >= 0.0)) throw ArgumentError("median_polish: tol must be non-negative");

    Decomposition d = empty_decomposition(panel, DecompositionMethod::median_polish);
    d.tolerance = options.tol;
    d.converged = false;
    const std::size_t n = panel.regions();
    const std::size_t t_len = panel.times();
    const std::size_t j_len = panel.ages();
    std::vector<std::span<const double>> row_curves(t_len);
    std::vector<double> column(n);

    for (std::size_t sweep = 1; sweep <= options.max_iter; ++sweep) {
        d.iterations_used = sweep;
        // Step 1: row medians out of the residuals, into the row effects.
        double largest = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t t = 0; t < t_len; ++t) row_curves[t] = d.residuals.curve(s, t);
            const std::vector<double> row_median = pointwise_median(row_curves);
            for (std::size_t j = 0; j < j_len; ++j) {
                largest = std::max(largest, std::abs(row_median[j]));
                d.row_effects(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) +=
                    row_median[j];
            }
            for (std::size_t t = 0; t < t_len; ++t) {
                auto curve = d.residuals.curve(s, t);
                for (std::size_t j = 0; j < j_len; ++j) curve[j] -= row_median[j];
            }
        }
        // Step 2: median of the row effects into the grand effect.
        for (std::size_t j = 0; j < j_len; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            for (std::size_t s = 0; s < n; ++s) {
                column[s] = d.row_effects(static_cast<Eigen::Index>(s), jj);
            }
            const double shift = median(column);
            d.grand_effect(jj) += shift;
            d.row_effects.col(jj).array() -= shift;
        }
        if (largest <= options.tol) {
            d.converged = true;
            break;
        }
    }
    return d;
}

Decomposition mean_decompose(const FunctionalPanel& panel) {
    Decomposition d = empty_decomposition(panel, DecompositionMethod::mean);
    const std::size_t n = panel.regions();
    const std::size_t t_len = panel.times();
    const std::size_t j_len = panel.ages();
    Eigen::MatrixXd row_means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                      static_cast<Eigen::Index>(j_len));
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = 0; t < t_len; ++t) {
            const auto c = panel.curve(s, t);
            for (std::size_t j = 0; j < j_len; ++j) {
                row_means(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) += c[j];
            }
        }
    }
    row_means /= static_cast<double>(t_len);
    d.grand_effect = row_means.colwise().mean().transpose();
    d.row_effects = row_means.rowwise() - d.grand_effect.transpose();
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = 0; t < t_len; ++t) {
            auto c = d.residuals.curve(s, t);
            for (std::size_t j = 0; j < j_len; ++j) {
                c[j] -= row_means(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j));
            }
        }
    }
    d.iterations_used = 0;
    return d;
}

Decomposition decompose(const FunctionalPanel& panel, DecompositionMethod method,
                        const MedianPolishOptions& options) {
    return method == DecompositionMethod::median_polish ? median_polish(panel, options)
                                                        : mean_decompose(panel);
}

FunctionalPanel reconstruct(const Decomposition& d) {
    const auto n = d.residuals.rows();
    const auto j_len = d.residuals.ages();
    if (static_cast<std::size_t>(d.grand_effect.size()) != j_len ||
        static_cast<std::size_t>(d.row_effects.rows()) != n ||
        static_cast<std::size_t>(d.row_effects.cols()) != j_len ||
        d.axes.regions() != n || d.axes.times() != d.residuals.times() ||
        d.axes.ages() != j_len) {
        throw ArgumentError("reconstruct: inconsistent decomposition shapes");
    }
    CurveArray values = d.residuals;
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = 0; t < values.times(); ++t) {
            auto c = values.curve(s, t);
            for (std::size_t j = 0; j < j_len; ++j) {
                const auto jj = static_cast<Eigen::Index>(j);
                c[j] = d.grand_effect(jj) + d.row_effects(static_cast<Eigen::Index>(s), jj) + c[j];
            }
        }
    }
    return FunctionalPanel(d.axes, std::move(values), d.scale);
}

}  // namespace hdconf
