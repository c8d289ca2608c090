#include "hdconf/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hdconf/error.hpp"

namespace hdconf {

namespace {

void check_settings(std::size_t grid_size, std::size_t basis_count) {
    if (basis_count < 4) {
        throw ConfigError("smoothing: basis_count must be at least 4, got " +
                          std::to_string(basis_count));
    }
    if (basis_count > grid_size) {
        throw ConfigError("smoothing: basis_count " + std::to_string(basis_count) +
                          " exceeds the number of grid points " + std::to_string(grid_size));
    }
}

Eigen::MatrixXd second_difference_penalty(std::size_t k) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k - 2),
                                              static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        d(i, i) = 1.0;
        d(i, i + 1) = -2.0;
        d(i, i + 2) = 1.0;
    }
    return d.transpose() * d;
}

}  // namespace

Eigen::MatrixXd cubic_bspline_basis(std::span<const double> grid, std::size_t basis_count) {
    check_settings(grid.size(), basis_count);
    const double lo = grid.front();
    const double hi = grid.back();
    const auto intervals = static_cast<double>(basis_count - 3);
    const double width = (hi - lo) / intervals;
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.size()),
                                              static_cast<Eigen::Index>(basis_count));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double pos = (grid[i] - lo) / width;
        auto m = static_cast<Eigen::Index>(std::floor(pos));
        m = std::clamp<Eigen::Index>(m, 0, static_cast<Eigen::Index>(basis_count) - 4);
        const double u = pos - static_cast<double>(m);
        const double u2 = u * u;
        const double u3 = u2 * u;
        const auto r = static_cast<Eigen::Index>(i);
        b(r, m) = (1.0 - u) * (1.0 - u) * (1.0 - u) / 6.0;
        b(r, m + 1) = (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0;
        b(r, m + 2) = (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0;
        b(r, m + 3) = u3 / 6.0;
    }
    return b;
}

PSplineSmoother::PSplineSmoother(std::vector<double> grid, std::size_t basis_count)
    : grid_(std::move(grid)), basis_count_(basis_count) {
    basis_ = cubic_bspline_basis(grid_, basis_count_);
    gram_ = basis_.transpose() * basis_;
    penalty_ = second_difference_penalty(basis_count_);
}

PSplineSmoother::Factorization PSplineSmoother::factorize(double penalty) const {
    if (!(penalty >= 0.0)) throw ConfigError("smoothing: penalty must be non-negative");
    Factorization f;
    f.penalty = penalty;
    f.ldlt.compute(gram_ + penalty * penalty_);
    if (f.ldlt.info() != Eigen::Success || f.ldlt.rcond() < 1e-13) {
        throw NumericalError("smoothing: singular normal equations");
    }
    f.effective_dof = f.ldlt.solve(gram_).trace();
    return f;
}

PSplineSmoother::Fit PSplineSmoother::fit(std::span<const double> values,
                                          const Factorization& f) const {
    if (values.size() != grid_.size()) {
        throw ArgumentError("PSplineSmoother::fit: curve length does not match the grid");
    }
    const Eigen::Map<const Eigen::VectorXd> y(values.data(),
                                              static_cast<Eigen::Index>(values.size()));
    const Eigen::VectorXd coef = f.ldlt.solve(basis_.transpose() * y);
    const Eigen::VectorXd fitted = basis_ * coef;

    Fit out;
    out.fitted.assign(fitted.data(), fitted.data() + fitted.size());
    out.penalty = f.penalty;
    out.effective_dof = f.effective_dof;
    const double n = static_cast<double>(values.size());
    const double rss = (y - fitted).squaredNorm();
    const double denom = n - out.effective_dof;
    out.gcv = denom > 1e-9 ? n * rss / (denom * denom) : std::numeric_limits<double>::infinity();
    return out;
}

PSplineSmoother::Fit PSplineSmoother::fit_gcv(std::span<const double> values,
                                              std::span<const Factorization> candidates) const {
    if (candidates.empty()) throw ConfigError("smoothing: empty GCV penalty grid");
    Fit best;
    bool have = false;
    for (const auto& f : candidates) {
        Fit candidate = fit(values, f);
        if (!have || candidate.gcv < best.gcv) {
            best = std::move(candidate);
            have = true;
        }
    }
    return best;
}

std::vector<double> default_gcv_penalties() {
    std::vector<double> grid;
    for (int k = 0; k <= 40; ++k) grid.push_back(std::pow(10.0, -4.0 + 0.25 * k));
    return grid;
}

namespace {

template <typename FitCurve>
FunctionalPanel smooth_each_curve(const FunctionalPanel& panel, FitCurve&& fit_curve) {
    CurveArray out(panel.regions(), panel.times(), panel.ages());
    for (std::size_t s = 0; s < panel.regions(); ++s) {
        for (std::size_t t = 0; t < panel.times(); ++t) {
            const auto fit = fit_curve(panel.curve(s, t));
            std::copy(fit.fitted.begin(), fit.fitted.end(), out.curve(s, t).begin());
        }
    }
    return FunctionalPanel(panel.axes(), std::move(out), panel.scale());
}

void check_panel(const FunctionalPanel& panel, std::size_t basis_count) {
    if (panel.scale() != Scale::log) {
        throw ArgumentError("smooth_panel: panel must be on the log scale");
    }
    check_settings(panel.ages(), basis_count);
}

// The system matrix is shared by every curve, so a singular system is reported
// against the first curve it would have been applied to.
[[noreturn]] void rethrow_with_cell(const NumericalError& e, const FunctionalPanel& panel) {
    throw NumericalError(std::string(e.what()) + " at region " + panel.region_ids().front() +
                         ", year " + std::to_string(panel.years().front()));
}

}  // namespace

FunctionalPanel smooth_panel(const FunctionalPanel& panel, double penalty,
                             std::size_t basis_count) {
    if (!(penalty >= 0.0)) throw ConfigError("smoothing: penalty must be non-negative");
    check_panel(panel, basis_count);
    const PSplineSmoother smoother(panel.age_grid(), basis_count);
    PSplineSmoother::Factorization f;
    try {
        f = smoother.factorize(penalty);
    } catch (const NumericalError& e) {
        rethrow_with_cell(e, panel);
    }
    return smooth_each_curve(panel,
                             [&](std::span<const double> y) { return smoother.fit(y, f); });
}

FunctionalPanel smooth_panel_gcv(const FunctionalPanel& panel, std::size_t basis_count) {
    check_panel(panel, basis_count);
    const PSplineSmoother smoother(panel.age_grid(), basis_count);
    std::vector<PSplineSmoother::Factorization> candidates;
    for (double lambda : default_gcv_penalties()) {
        try {
            candidates.push_back(smoother.factorize(lambda));
        } catch (const NumericalError&) {
            // Tiny penalties can be singular when basis_count is close to J; skip them.
        }
    }
    if (candidates.empty()) {
        rethrow_with_cell(NumericalError("smoothing: every GCV penalty is singular"), panel);
    }
    return smooth_each_curve(panel, [&](std::span<const double> y) {
        return smoother.fit_gcv(y, candidates);
    });
}

}  // namespace hdconf
