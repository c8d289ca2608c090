#include "hdconf/factor_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hdconf/error.hpp"

namespace hdconf {

std::vector<double> trapezoid_weights(std::span<const double> grid) {
    if (grid.empty()) throw ArgumentError("trapezoid_weights: empty grid");
    if (grid.size() == 1) return {1.0};
    std::vector<double> w(grid.size(), 0.0);
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        const double half = 0.5 * (grid[j + 1] - grid[j]);
        w[j] += half;
        w[j + 1] += half;
    }
    return w;
}

GramMatrix gram_matrix(const CurveArray& residuals, std::span<const double> quadrature) {
    if (quadrature.size() != residuals.ages()) {
        throw ArgumentError("gram_matrix: quadrature weights do not match the age grid");
    }
    const std::size_t n = residuals.rows();
    const std::size_t t_len = residuals.times();
    const std::size_t j_len = residuals.ages();
    if (n == 0 || t_len == 0) throw ArgumentError("gram_matrix: empty residual panel");

    // Stack sqrt(w)-weighted curves: column block s holds region s.
    Eigen::MatrixXd stacked(static_cast<Eigen::Index>(t_len), static_cast<Eigen::Index>(n * j_len));
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = 0; t < t_len; ++t) {
            const auto c = residuals.curve(s, t);
            for (std::size_t j = 0; j < j_len; ++j) {
                if (quadrature[j] < 0.0) throw ArgumentError("gram_matrix: negative weight");
                stacked(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s * j_len + j)) =
                    std::sqrt(quadrature[j]) * c[j];
            }
        }
    }
    GramMatrix g;
    g.delta = (stacked * stacked.transpose()) / static_cast<double>(n);
    g.delta = 0.5 * (g.delta + g.delta.transpose()).eval();
    g.quadrature.assign(quadrature.begin(), quadrature.end());
    return g;
}

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& matrix) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("symmetric eigen-decomposition failed");
    }
    SymmetricEigen out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

void fix_column_signs(Eigen::MatrixXd& columns) {
    for (Eigen::Index k = 0; k < columns.cols(); ++k) {
        Eigen::Index best = 0;
        for (Eigen::Index t = 1; t < columns.rows(); ++t) {
            if (std::abs(columns(t, k)) > std::abs(columns(best, k))) best = t;
        }
        if (columns.rows() > 0 && columns(best, k) < 0.0) columns.col(k) *= -1.0;
    }
}

namespace {

Eigen::MatrixXd scores_from_eigen(const SymmetricEigen& eig, std::size_t q) {
    const auto t_len = eig.vectors.rows();
    Eigen::MatrixXd scores = eig.vectors.leftCols(static_cast<Eigen::Index>(q)) *
                             std::sqrt(static_cast<double>(t_len));
    fix_column_signs(scores);
    return scores;
}

}  // namespace

Eigen::MatrixXd estimate_scores(const GramMatrix& g, std::size_t q) {
    const auto t_len = static_cast<std::size_t>(g.delta.rows());
    if (q < 1 || q > t_len) {
        throw ArgumentError("estimate_scores: q must lie in [1, T], got " + std::to_string(q));
    }
    return scores_from_eigen(symmetric_eigen(g.delta), q);
}

std::vector<Eigen::MatrixXd> estimate_loadings(const CurveArray& residuals,
                                               const Eigen::MatrixXd& scores) {
    const std::size_t t_len = residuals.times();
    if (static_cast<std::size_t>(scores.rows()) != t_len) {
        throw ArgumentError("estimate_loadings: score rows do not match T");
    }
    const auto j_len = static_cast<Eigen::Index>(residuals.ages());
    std::vector<Eigen::MatrixXd> loadings;
    loadings.reserve(residuals.rows());
    for (std::size_t s = 0; s < residuals.rows(); ++s) {
        Eigen::MatrixXd x(static_cast<Eigen::Index>(t_len), j_len);
        for (std::size_t t = 0; t < t_len; ++t) {
            const auto c = residuals.curve(s, t);
            for (Eigen::Index j = 0; j < j_len; ++j) {
                x(static_cast<Eigen::Index>(t), j) = c[static_cast<std::size_t>(j)];
            }
        }
        loadings.emplace_back((x.transpose() * scores) / static_cast<double>(t_len));
    }
    return loadings;
}

double default_factor_penalty(std::size_t regions, std::size_t times) {
    return 1.0 / std::sqrt(static_cast<double>(std::max(regions, times)));
}

FactorCount select_num_factors(std::span<const double> eigenvalues, double penalty,
                               std::size_t q_max) {
    if (eigenvalues.empty()) throw ArgumentError("select_num_factors: no eigenvalues");
    if (q_max < 1 || q_max > eigenvalues.size()) {
        throw ArgumentError("select_num_factors: q_max must lie in [1, number of eigenvalues]");
    }
    FactorCount out;
    double best = 0.0;
    for (std::size_t l = 1; l <= q_max; ++l) {
        const double value = eigenvalues[l - 1] + static_cast<double>(l) * penalty;
        out.objective.push_back(value);
        if (l == 1 || value < best) {
            best = value;
            out.argmin = l;
        }
    }
    out.raw = static_cast<long>(out.argmin) - 1;
    out.q = std::max<std::size_t>(1, out.argmin - 1);
    return out;
}

Eigen::VectorXd FactorModel::fitted_curve(std::size_t s, std::size_t t) const {
    return loadings[s] * scores.row(static_cast<Eigen::Index>(t)).transpose();
}

CurveArray FactorModel::fitted() const {
    const auto t_len = static_cast<std::size_t>(scores.rows());
    const std::size_t j_len = loadings.empty() ? 0 : static_cast<std::size_t>(loadings[0].rows());
    CurveArray out(loadings.size(), t_len, j_len);
    for (std::size_t s = 0; s < loadings.size(); ++s) {
        const Eigen::MatrixXd fit = loadings[s] * scores.transpose();  // J x T
        for (std::size_t t = 0; t < t_len; ++t) {
            auto c = out.curve(s, t);
            for (std::size_t j = 0; j < j_len; ++j) {
                c[j] = fit(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(t));
            }
        }
    }
    return out;
}

FactorModel fit_factor_model(const CurveArray& residuals, std::span<const double> quadrature,
                             const FactorModelOptions& options) {
    const std::size_t t_len = residuals.times();
    if (t_len < 2) throw ArgumentError("fit_factor_model: need at least two years");

    const GramMatrix g = gram_matrix(residuals, quadrature);
    const SymmetricEigen eig = symmetric_eigen(g.delta);

    FactorModel model;
    model.quadrature = g.quadrature;
    model.eigenvalues = eig.values / static_cast<double>(t_len);
    // Values below 1e-12 of the leading eigenvalue (including round-off negatives) are zero.
    const double leading = std::max(model.eigenvalues(0), 0.0);
    for (Eigen::Index l = 0; l < model.eigenvalues.size(); ++l) {
        if (model.eigenvalues(l) < 1e-12 * leading) model.eigenvalues(l) = 0.0;
    }
    model.penalty = options.penalty.value_or(default_factor_penalty(residuals.rows(), t_len));
    model.q_max = options.q_max.value_or(t_len);
    if (model.q_max < 1 || model.q_max > t_len) {
        throw ArgumentError("fit_factor_model: q_max must lie in [1, T]");
    }

    if (options.q_override) {
        model.q = *options.q_override;
        if (model.q < 1 || model.q > t_len) {
            throw ArgumentError("fit_factor_model: q_override must lie in [1, T]");
        }
        model.raw_q = static_cast<long>(model.q);
    } else {
        const std::vector<double> nu(model.eigenvalues.data(),
                                     model.eigenvalues.data() + model.eigenvalues.size());
        const FactorCount count = select_num_factors(nu, model.penalty, model.q_max);
        model.q = count.q;
        model.raw_q = count.raw;
    }
    model.scores = scores_from_eigen(eig, model.q);
    model.loadings = estimate_loadings(residuals, model.scores);
    return model;
}

}  // namespace hdconf
