#pragma once

// Straightforward reference implementations used to cross-check the library.
// They favour obviousness over speed and share no code with hdconf.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hdconf/curve_array.hpp"
#include "hdconf/panel.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline double sorted_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct ScalarPolish {
    double grand = 0.0;
    std::vector<double> rows;
    Matrix residuals;
    int sweeps = 0;
};

// Classical median polish restricted to row sweeps: each sweep moves row medians of
// the residual table into the row effects, then the median of the row effects into
// the grand effect.
inline ScalarPolish scalar_median_polish(const Matrix& table, int max_iter = 50, double tol = 1e-8) {
    ScalarPolish out;
    out.residuals = table;
    out.rows.assign(table.size(), 0.0);
    for (int sweep = 1; sweep <= max_iter; ++sweep) {
        out.sweeps = sweep;
        double largest = 0.0;
        for (std::size_t i = 0; i < table.size(); ++i) {
            const double m = sorted_median(out.residuals[i]);
            largest = std::max(largest, std::fabs(m));
            for (double& r : out.residuals[i]) r -= m;
            out.rows[i] += m;
        }
        const double c = sorted_median(out.rows);
        for (double& r : out.rows) r -= c;
        out.grand += c;
        if (largest <= tol) break;
    }
    return out;
}

inline double pinball_sum(const std::vector<double>& y, double c, double tau) {
    double s = 0.0;
    for (double v : y) {
        const double r = v - c;
        s += r >= 0 ? tau * r : (tau - 1.0) * r;
    }
    return s;
}

struct QuantileAnswer {
    double value = 0.0;
    double objective = 0.0;
};

// Evaluates the check-loss sum at every data point and keeps the smallest minimizer.
inline QuantileAnswer brute_force_quantile(const std::vector<double>& y, double tau) {
    QuantileAnswer best{0.0, std::numeric_limits<double>::infinity()};
    std::vector<double> candidates = y;
    std::sort(candidates.begin(), candidates.end());
    for (double c : candidates) {
        const double obj = pinball_sum(y, c, tau);
        if (obj < best.objective - 1e-12 * (1.0 + std::fabs(obj))) best = {c, obj};
    }
    return best;
}

// Minimum of the check-loss over basic solutions: every k-subset of rows whose
// square system is non-singular interpolates k observations.
inline double vertex_enumeration_objective(const Eigen::MatrixXd& x, const std::vector<double>& y,
                                           double tau) {
    const int n = static_cast<int>(x.rows());
    const int k = static_cast<int>(x.cols());
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        Eigen::MatrixXd a(k, k);
        Eigen::VectorXd b(k);
        for (int r = 0; r < k; ++r) {
            a.row(r) = x.row(idx[static_cast<std::size_t>(r)]);
            b(r) = y[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
        if (lu.isInvertible()) {
            const Eigen::VectorXd beta = lu.solve(b);
            double obj = 0.0;
            for (int i = 0; i < n; ++i) {
                const double r = y[static_cast<std::size_t>(i)] - x.row(i).dot(beta);
                obj += r >= 0 ? tau * r : (tau - 1.0) * r;
            }
            best = std::min(best, obj);
        }
        int pos = k - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
        if (pos < 0) break;
        ++idx[static_cast<std::size_t>(pos)];
        for (int r = pos + 1; r < k; ++r) idx[static_cast<std::size_t>(r)] = idx[static_cast<std::size_t>(r - 1)] + 1;
    }
    return best;
}

// Delta[t][t'] = (1/N) sum_s sum_j w_j X(s,t,j) X(s,t',j) by direct summation.
inline Eigen::MatrixXd gram(const hdconf::CurveArray& x, const std::vector<double>& w) {
    const std::size_t T = x.times();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(T));
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t u = 0; u < T; ++u) {
            double s = 0.0;
            for (std::size_t r = 0; r < x.rows(); ++r) {
                for (std::size_t j = 0; j < x.ages(); ++j) s += w[j] * x(r, t, j) * x(r, u, j);
            }
            d(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(u)) = s / static_cast<double>(x.rows());
        }
    }
    return d;
}

inline double sample_sd(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline hdconf::CurveArray random_array(std::size_t n, std::size_t t, std::size_t j, std::mt19937_64& rng,
                                       double scale = 1.0) {
    std::normal_distribution<double> z(0.0, scale);
    hdconf::CurveArray a(n, t, j);
    for (double& v : a.values()) v = z(rng);
    return a;
}

inline hdconf::FunctionalPanel random_panel(std::size_t n, std::size_t t, std::size_t j, std::mt19937_64& rng,
                                            double scale = 1.0) {
    hdconf::PanelAxes axes;
    for (std::size_t s = 0; s < n; ++s) axes.region_ids.push_back("S" + std::to_string(s));
    axes.years = hdconf::consecutive_years(2000, t);
    axes.age_grid = hdconf::integer_age_grid(j);
    return hdconf::FunctionalPanel(std::move(axes), random_array(n, t, j, rng, scale), hdconf::Scale::log);
}

inline hdconf::FunctionalPanel panel_from(const Matrix& rows_by_year) {
    const std::size_t n = rows_by_year.size();
    const std::size_t t = rows_by_year.front().size();
    hdconf::CurveArray a(n, t, 1);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t k = 0; k < t; ++k) a(s, k, 0) = rows_by_year[s][k];
    }
    hdconf::PanelAxes axes;
    for (std::size_t s = 0; s < n; ++s) axes.region_ids.push_back("S" + std::to_string(s));
    axes.years = hdconf::consecutive_years(2000, t);
    axes.age_grid = {0.0};
    return hdconf::FunctionalPanel(std::move(axes), std::move(a), hdconf::Scale::log);
}

}  // namespace oracle
