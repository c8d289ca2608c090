#include "hdconf/pinball.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hdconf/error.hpp"

namespace hdconf {

double pinball_objective(const Eigen::MatrixXd& design, std::span<const double> response,
                         const Eigen::VectorXd& coefficients, double tau) {
    const Eigen::VectorXd fitted = design * coefficients;
    double total = 0.0;
    for (std::size_t i = 0; i < response.size(); ++i) {
        total += pinball_loss(response[i] - fitted(static_cast<Eigen::Index>(i)), tau);
    }
    return total;
}

double smallest_quantile_minimizer(std::span<const double> response, double tau) {
    if (response.empty()) throw ArgumentError("smallest_quantile_minimizer: empty response");
    std::vector<double> sorted(response.begin(), response.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(tau * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

namespace {

// Dense tableau simplex for  min c'z  s.t.  A z = b, z >= 0, starting from a feasible
// basis given as one basic column per row (the tableau is already canonical for it).
class Simplex {
public:
    Simplex(Eigen::MatrixXd tableau, Eigen::VectorXd rhs, Eigen::VectorXd cost,
            std::vector<Eigen::Index> basis)
        : a_(std::move(tableau)), b_(std::move(rhs)), c_(std::move(cost)), basis_(std::move(basis)) {
        reduced_ = c_;
        for (Eigen::Index i = 0; i < a_.rows(); ++i) {
            reduced_ -= c_(basis_[static_cast<std::size_t>(i)]) * a_.row(i).transpose();
        }
    }

    void solve() {
        constexpr double eps = 1e-11;
        const Eigen::Index max_pivots = 50 * (a_.rows() + a_.cols()) + 1000;
        bool bland = false;
        int degenerate_run = 0;
        for (Eigen::Index iter = 0; iter < max_pivots; ++iter) {
            Eigen::Index entering = -1;
            double most_negative = -eps;
            for (Eigen::Index j = 0; j < a_.cols(); ++j) {
                if (reduced_(j) < most_negative) {
                    entering = j;
                    if (bland) break;
                    most_negative = reduced_(j);
                }
            }
            if (entering < 0) return;

            Eigen::Index leaving = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < a_.rows(); ++i) {
                const double coef = a_(i, entering);
                if (coef <= eps) continue;
                const double ratio = b_(i) / coef;
                if (leaving < 0 || ratio < best_ratio - 1e-14) {
                    best_ratio = ratio;
                    leaving = i;
                } else if (ratio <= best_ratio + 1e-14 &&
                           basis_[static_cast<std::size_t>(i)] <
                               basis_[static_cast<std::size_t>(leaving)]) {
                    best_ratio = std::min(best_ratio, ratio);
                    leaving = i;
                }
            }
            if (leaving < 0) throw NumericalError("pinball_fit: unbounded linear program");

            degenerate_run = best_ratio <= 1e-14 ? degenerate_run + 1 : 0;
            if (degenerate_run > 50) bland = true;
            pivot(leaving, entering);
        }
        throw NumericalError("pinball_fit: simplex did not converge");
    }

    [[nodiscard]] Eigen::VectorXd solution() const {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(a_.cols());
        for (Eigen::Index i = 0; i < a_.rows(); ++i) {
            z(basis_[static_cast<std::size_t>(i)]) = std::max(b_(i), 0.0);
        }
        return z;
    }

private:
    void pivot(Eigen::Index row, Eigen::Index col) {
        const double p = a_(row, col);
        a_.row(row) /= p;
        b_(row) /= p;
        for (Eigen::Index i = 0; i < a_.rows(); ++i) {
            if (i == row) continue;
            const double f = a_(i, col);
            if (f == 0.0) continue;
            a_.row(i) -= f * a_.row(row);
            b_(i) -= f * b_(row);
            if (b_(i) < 0.0 && b_(i) > -1e-12) b_(i) = 0.0;
        }
        const double fr = reduced_(col);
        reduced_ -= fr * a_.row(row).transpose();
        basis_[static_cast<std::size_t>(row)] = col;
    }

    Eigen::MatrixXd a_;
    Eigen::VectorXd b_;
    Eigen::VectorXd c_;
    Eigen::VectorXd reduced_;
    std::vector<Eigen::Index> basis_;
};

Eigen::VectorXd simplex_quantile_regression(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                            double tau) {
    const Eigen::Index n = x.rows();
    const Eigen::Index k = x.cols();
    // Variables: beta+ (k), beta- (k), u (n), v (n).
    const Eigen::Index m = 2 * k + 2 * n;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, m);
    Eigen::VectorXd b(n);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
    c.segment(2 * k, n).setConstant(tau);
    c.segment(2 * k + n, n).setConstant(1.0 - tau);
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sign = y(i) >= 0.0 ? 1.0 : -1.0;
        a.block(i, 0, 1, k) = sign * x.row(i);
        a.block(i, k, 1, k) = -sign * x.row(i);
        a(i, 2 * k + i) = sign;
        a(i, 2 * k + n + i) = -sign;
        b(i) = sign * y(i);
        basis[static_cast<std::size_t>(i)] = sign > 0 ? 2 * k + i : 2 * k + n + i;
    }
    Simplex lp(std::move(a), std::move(b), std::move(c), std::move(basis));
    lp.solve();
    const Eigen::VectorXd z = lp.solution();
    return z.head(k) - z.segment(k, k);
}

}  // namespace

PinballFit pinball_fit(const Eigen::MatrixXd& design, std::span<const double> response, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw ArgumentError("pinball_fit: tau must lie in (0, 1)");
    const Eigen::Index n = design.rows();
    const Eigen::Index k = design.cols();
    if (static_cast<std::size_t>(n) != response.size()) {
        throw ArgumentError("pinball_fit: design rows do not match the response length");
    }
    if (k < 1 || n < k) {
        throw ArgumentError("pinball_fit: need at least as many rows as columns (" +
                            std::to_string(n) + " x " + std::to_string(k) + ")");
    }

    // Keep columns that raise the rank of the kept set, in order.
    std::vector<Eigen::Index> kept;
    PinballFit fit;
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::MatrixXd trial(n, static_cast<Eigen::Index>(kept.size()) + 1);
        for (std::size_t c = 0; c < kept.size(); ++c) {
            trial.col(static_cast<Eigen::Index>(c)) = design.col(kept[c]);
        }
        trial.col(trial.cols() - 1) = design.col(j);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
        qr.setThreshold(1e-10);
        if (qr.rank() == trial.cols()) {
            kept.push_back(j);
        } else {
            fit.dropped_columns.push_back(static_cast<std::size_t>(j));
        }
    }
    fit.coefficients = Eigen::VectorXd::Zero(k);
    if (kept.empty()) {  // all-zero design
        fit.objective = pinball_objective(design, response, fit.coefficients, tau);
        return fit;
    }

    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t c = 0; c < kept.size(); ++c) x.col(static_cast<Eigen::Index>(c)) = design.col(kept[c]);
    const Eigen::Map<const Eigen::VectorXd> y(response.data(), n);

    Eigen::VectorXd beta;
    if (x.cols() == 1 && (x.col(0).array() == 1.0).all()) {
        beta = Eigen::VectorXd::Constant(1, smallest_quantile_minimizer(response, tau));
    } else {
        // Scale columns and response to unit max magnitude for the pivot tolerances.
        Eigen::VectorXd col_scale = x.cwiseAbs().colwise().maxCoeff().transpose();
        const double y_scale = std::max(y.cwiseAbs().maxCoeff(), 1e-300);
        Eigen::MatrixXd xs = x * col_scale.cwiseInverse().asDiagonal();
        const Eigen::VectorXd ys = y / y_scale;
        beta = simplex_quantile_regression(xs, ys, tau);
        beta = beta.cwiseQuotient(col_scale) * y_scale;
    }
    for (std::size_t c = 0; c < kept.size(); ++c) fit.coefficients(kept[c]) = beta(static_cast<Eigen::Index>(c));
    fit.objective = pinball_objective(design, response, fit.coefficients, tau);
    return fit;
}

}  // namespace hdconf
