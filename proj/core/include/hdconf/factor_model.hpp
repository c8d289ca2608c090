#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hdconf/curve_array.hpp"

namespace hdconf {

/// Trapezoidal quadrature weights on a grid; they sum to grid.back() - grid.front().
/// A single-point grid gets the unit weight {1}.
[[nodiscard]] std::vector<double> trapezoid_weights(std::span<const double> grid);

/// T x T matrix of region-averaged integrated cross products of residual curves.
struct GramMatrix {
    Eigen::MatrixXd delta;
    std::vector<double> quadrature;
};

/// delta(t,t') = (1/N) sum_s sum_j w_j X(s,t,j) X(s,t',j).
[[nodiscard]] GramMatrix gram_matrix(const CurveArray& residuals,
                                     std::span<const double> quadrature);

/// Eigenvalues (descending) and matching orthonormal eigenvectors of a symmetric matrix.
struct SymmetricEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

/// Symmetric eigen-decomposition sorted in descending order. Throws NumericalError
/// if the solver fails.
[[nodiscard]] SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& matrix);

/// Flips each column so that its entry of largest magnitude is positive; ties go to the
/// earliest index.
void fix_column_signs(Eigen::MatrixXd& columns);

/// sqrt(T) times the leading q eigenvectors of delta, with the sign rule applied.
[[nodiscard]] Eigen::MatrixXd estimate_scores(const GramMatrix& g, std::size_t q);

/// Least-squares loadings: loadings[s](j, :) = (1/T) sum_t X(s,t,j) scores(t, :).
[[nodiscard]] std::vector<Eigen::MatrixXd> estimate_loadings(const CurveArray& residuals,
                                                             const Eigen::MatrixXd& scores);

/// Penalty max(T, N)^(-1/2).
[[nodiscard]] double default_factor_penalty(std::size_t regions, std::size_t times);

struct FactorCount {
    std::size_t q = 1;            // clamped to at least 1
    long raw = 0;                 // argmin - 1, may be 0
    std::size_t argmin = 1;       // 1-based minimizing l
    std::vector<double> objective;  // nu_l + l * penalty for l = 1..q_max
};

/// argmin over 1 <= l <= q_max of nu_l + l * penalty, minus one, clamped below at 1.
/// Ties break toward the smallest l. Throws ArgumentError on an empty spectrum.
[[nodiscard]] FactorCount select_num_factors(std::span<const double> eigenvalues,
                                             double penalty, std::size_t q_max);

struct FactorModelOptions {
    std::optional<std::size_t> q_override;
    std::optional<std::size_t> q_max;  // default T
    std::optional<double> penalty;     // default max(T, N)^(-1/2)
};

struct FactorModel {
    Eigen::MatrixXd scores;                // T x q
    std::vector<Eigen::MatrixXd> loadings;  // N matrices of J x q
    std::size_t q = 1;
    long raw_q = 1;
    Eigen::VectorXd eigenvalues;           // of delta / T, descending, length T
    double penalty = 0.0;
    std::size_t q_max = 1;
    std::vector<double> quadrature;

    /// Fitted residual curve loadings[s] * scores(t, :)'.
    [[nodiscard]] Eigen::VectorXd fitted_curve(std::size_t s, std::size_t t) const;
    [[nodiscard]] CurveArray fitted() const;
};

/// Gram matrix, eigenanalysis, factor count, scores and loadings on residual curves.
/// Needs T >= 2.
[[nodiscard]] FactorModel fit_factor_model(const CurveArray& residuals,
                                           std::span<const double> quadrature,
                                           const FactorModelOptions& options = {});

inline constexpr int kSignRuleVersion = 1;

}  // namespace hdconf
