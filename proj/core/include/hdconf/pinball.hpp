#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace hdconf {

/// Check loss rho_tau(r) = r (tau - 1{r < 0}).
[[nodiscard]] inline double pinball_loss(double residual, double tau) noexcept {
    return residual >= 0.0 ? tau * residual : (tau - 1.0) * residual;
}

[[nodiscard]] double pinball_objective(const Eigen::MatrixXd& design, std::span<const double> response,
                                       const Eigen::VectorXd& coefficients, double tau);

/// Smallest minimizer of sum rho_tau(y_i - c) over c: the order statistic of rank ceil(tau n).
[[nodiscard]] double smallest_quantile_minimizer(std::span<const double> response, double tau);

struct PinballFit {
    Eigen::VectorXd coefficients;              // one per design column; dropped columns are 0
    double objective = 0.0;
    std::vector<std::size_t> dropped_columns;  // linearly dependent trailing columns
};

/// Linear quantile regression: minimizes sum rho_tau(y_i - x_i' beta).
///
/// Columns that are linearly dependent on earlier columns are dropped. A design whose
/// only remaining column is all ones is solved in closed form and returns the smallest
/// minimizer; anything else goes through an exact simplex on the primal LP
/// min tau 1'u + (1 - tau) 1'v  s.t.  X beta + u - v = y,  u, v >= 0.
[[nodiscard]] PinballFit pinball_fit(const Eigen::MatrixXd& design, std::span<const double> response,
                                     double tau);

}  // namespace hdconf
