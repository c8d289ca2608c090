#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hdconf/panel.hpp"

namespace hdconf {

/// Cubic B-spline basis with equally spaced knots over [grid.front(), grid.back()],
/// evaluated at the grid points. Returns a grid.size() x basis_count matrix.
[[nodiscard]] Eigen::MatrixXd cubic_bspline_basis(std::span<const double> grid,
                                                  std::size_t basis_count);

/// Penalized cubic B-spline (P-spline) smoother with a second-order difference
/// penalty on the coefficients. The design is fixed by the grid, so one smoother
/// serves every curve of a panel.
class PSplineSmoother {
public:
    PSplineSmoother(std::vector<double> grid, std::size_t basis_count);

    struct Fit {
        std::vector<double> fitted;
        double penalty = 0.0;
        double effective_dof = 0.0;  // trace of the hat matrix
        double gcv = 0.0;
    };

    /// Factorized normal equations for one penalty value, reusable across curves.
    struct Factorization {
        double penalty = 0.0;
        Eigen::LDLT<Eigen::MatrixXd> ldlt;
        double effective_dof = 0.0;  // trace of the hat matrix
    };

    /// Throws NumericalError if the normal equations are singular.
    [[nodiscard]] Factorization factorize(double penalty) const;

    [[nodiscard]] Fit fit(std::span<const double> values, const Factorization& f) const;
    [[nodiscard]] Fit fit(std::span<const double> values, double penalty) const {
        return fit(values, factorize(penalty));
    }

    /// Fit with the penalty of smallest generalized cross-validation score.
    [[nodiscard]] Fit fit_gcv(std::span<const double> values,
                              std::span<const Factorization> candidates) const;

    [[nodiscard]] std::size_t basis_count() const noexcept { return basis_count_; }

private:
    std::vector<double> grid_;
    std::size_t basis_count_;
    Eigen::MatrixXd basis_;
    Eigen::MatrixXd gram_;     // B'B
    Eigen::MatrixXd penalty_;  // D'D
};

/// Default GCV search grid: 10^-4 ... 10^6 in quarter-decade steps.
[[nodiscard]] std::vector<double> default_gcv_penalties();

/// Replaces every curve of a log-scale panel by its P-spline fit with a fixed penalty.
/// Throws ConfigError for basis_count < 4, basis_count > J or a negative penalty.
[[nodiscard]] FunctionalPanel smooth_panel(const FunctionalPanel& panel, double penalty,
                                           std::size_t basis_count);

/// As smooth_panel, choosing the penalty per curve by generalized cross-validation.
[[nodiscard]] FunctionalPanel smooth_panel_gcv(const FunctionalPanel& panel,
                                               std::size_t basis_count);

}  // namespace hdconf
