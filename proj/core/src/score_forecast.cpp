#include "hdconf/score_forecast.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include "hdconf/error.hpp"

namespace hdconf {

std::string_view to_string(ForecasterKind kind) noexcept {
    switch (kind) {
        case ForecasterKind::ar_aic: return "ar_aic";
        case ForecasterKind::rw_drift: return "rw_drift";
        case ForecasterKind::ses: return "ses";
        case ForecasterKind::holt: return "holt";
    }
    return "?";
}

ForecasterKind parse_forecaster_kind(std::string_view text) {
    if (text == "ar_aic" || text == "arima") return ForecasterKind::ar_aic;
    if (text == "rw_drift") return ForecasterKind::rw_drift;
    if (text == "ses") return ForecasterKind::ses;
    if (text == "holt" || text == "ets") return ForecasterKind::holt;
    throw ArgumentError("unknown forecaster '" + std::string(text) + "'");
}

std::size_t default_ar_order_max(std::size_t length) noexcept {
    return std::min<std::size_t>(10, length / 4);
}

namespace {

bool is_stationary(std::span<const double> phi) {
    const auto p = static_cast<Eigen::Index>(phi.size());
    if (p == 0) return true;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) companion(0, i) = phi[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    if (solver.info() != Eigen::Success) return false;
    for (Eigen::Index i = 0; i < p; ++i) {
        if (std::abs(solver.eigenvalues()(i)) >= 1.0) return false;
    }
    return true;
}

}  // namespace

UnivariateModel fit_rw_drift(std::span<const double> series) {
    if (series.size() < 2) throw ArgumentError("fit_rw_drift: need at least two observations");
    UnivariateModel m;
    m.kind = m.requested = ForecasterKind::rw_drift;
    m.fitted_on.assign(series.begin(), series.end());
    const double n_diff = static_cast<double>(series.size() - 1);
    const double drift = (series.back() - series.front()) / n_diff;
    double ss = 0.0;
    for (std::size_t t = 1; t < series.size(); ++t) {
        const double e = series[t] - series[t - 1] - drift;
        ss += e * e;
    }
    m.coefficients = {drift};
    m.sigma2 = ss / n_diff;
    return m;
}

UnivariateModel fit_ar_aic(std::span<const double> series, std::size_t p_max) {
    const std::size_t len = series.size();
    if (len < p_max + 2) {
        throw ArgumentError("fit_ar_aic: series of length " + std::to_string(len) +
                            " is too short for p_max = " + std::to_string(p_max));
    }
    const std::size_t n = len - p_max;
    const auto rows = static_cast<Eigen::Index>(n);
    Eigen::VectorXd y(rows);
    for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = series[p_max + i];
    // Exact fits leave round-off residue; flooring RSS makes them tie so the smaller p wins.
    const double rss_floor = std::max(1e-24 * y.squaredNorm(), 1e-300);

    UnivariateModel best;
    best.kind = best.requested = ForecasterKind::ar_aic;
    double best_aic = std::numeric_limits<double>::infinity();
    std::vector<std::string> notes;
    bool have = false;
    for (std::size_t p = 0; p <= p_max; ++p) {
        Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(p + 1));
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            x(r, 0) = 1.0;
            for (std::size_t k = 1; k <= p; ++k) {
                x(r, static_cast<Eigen::Index>(k)) = series[p_max + i - k];
            }
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
        qr.setThreshold(1e-10);
        if (qr.rank() < x.cols()) {
            notes.push_back("AR(" + std::to_string(p) + ") regression is singular; skipped");
            continue;
        }
        const Eigen::VectorXd beta = qr.solve(y);
        const double rss = std::max((y - x * beta).squaredNorm(), rss_floor);
        const double nd = static_cast<double>(n);
        const double aic = nd * std::log(rss / nd) + 2.0 * static_cast<double>(p + 2);
        if (!have || aic < best_aic) {
            have = true;
            best_aic = aic;
            best.order_p = p;
            best.coefficients.assign(beta.data(), beta.data() + beta.size());
            best.sigma2 = (y - x * beta).squaredNorm() / nd;
        }
    }
    best.fitted_on.assign(series.begin(), series.end());
    best.notes = std::move(notes);
    if (!have) {
        throw NumericalError("fit_ar_aic: every candidate regression is singular");
    }
    if (!is_stationary(std::span<const double>(best.coefficients).subspan(1))) {
        UnivariateModel fallback = fit_rw_drift(series);
        fallback.requested = ForecasterKind::ar_aic;
        fallback.notes = std::move(best.notes);
        fallback.notes.push_back("AR(" + std::to_string(best.order_p) +
                                 ") fit is non-stationary; fell back to rw_drift");
        return fallback;
    }
    return best;
}

namespace {

struct SmoothingRun {
    double sse = 0.0;
    double level = 0.0;
    double trend = 0.0;
};

SmoothingRun run_smoothing(std::span<const double> y, double alpha, std::optional<double> beta) {
    SmoothingRun run;
    run.level = y[0];
    if (beta) run.trend = 0.5 * (y[2] - y[0]);  // mean of the first two differences
    for (std::size_t t = 1; t < y.size(); ++t) {
        const double prediction = run.level + run.trend;
        const double e = y[t] - prediction;
        run.sse += e * e;
        const double previous = run.level;
        run.level = prediction + alpha * e;
        if (beta) run.trend = *beta * (run.level - previous) + (1.0 - *beta) * run.trend;
    }
    return run;
}

UnivariateModel smoothing_model(std::span<const double> series, double alpha,
                                std::optional<double> beta) {
    UnivariateModel m;
    m.kind = m.requested = beta ? ForecasterKind::holt : ForecasterKind::ses;
    const SmoothingRun run = run_smoothing(series, alpha, beta);
    m.coefficients = {alpha};
    if (beta) m.coefficients.push_back(*beta);
    m.level = run.level;
    m.trend = run.trend;
    m.sigma2 = run.sse / static_cast<double>(series.size() - 1);
    m.fitted_on.assign(series.begin(), series.end());
    return m;
}

}  // namespace

UnivariateModel make_ses(std::span<const double> series, double alpha) {
    if (series.size() < 2) throw ArgumentError("make_ses: need at least two observations");
    return smoothing_model(series, alpha, std::nullopt);
}

UnivariateModel make_holt(std::span<const double> series, double alpha, double beta) {
    if (series.size() < 3) throw ArgumentError("make_holt: need at least three observations");
    return smoothing_model(series, alpha, beta);
}

UnivariateModel fit_ets(std::span<const double> series, bool trend) {
    if (series.size() < 4) throw ArgumentError("fit_ets: need at least four observations");
    double best_sse = std::numeric_limits<double>::infinity();
    double best_alpha = 0.01;
    double best_beta = 0.01;
    for (int a = 1; a <= 99; ++a) {
        const double alpha = a / 100.0;
        if (!trend) {
            const double sse = run_smoothing(series, alpha, std::nullopt).sse;
            if (sse < best_sse) {
                best_sse = sse;
                best_alpha = alpha;
            }
            continue;
        }
        for (int b = 1; b <= 99; ++b) {
            const double beta = b / 100.0;
            const double sse = run_smoothing(series, alpha, beta).sse;
            if (sse < best_sse) {
                best_sse = sse;
                best_alpha = alpha;
                best_beta = beta;
            }
        }
    }
    return trend ? smoothing_model(series, best_alpha, best_beta)
                 : smoothing_model(series, best_alpha, std::nullopt);
}

UnivariateModel fit_univariate(std::span<const double> series, ForecasterKind kind,
                               std::optional<std::size_t> p_max) {
    if (series.empty()) throw ArgumentError("fit_univariate: empty series");
    if (series.size() == 1) {
        // A single point: flat forecast.
        UnivariateModel m;
        m.kind = ForecasterKind::rw_drift;
        m.requested = kind;
        m.coefficients = {0.0};
        m.fitted_on.assign(series.begin(), series.end());
        if (kind != ForecasterKind::rw_drift) m.notes.push_back("series of length 1; flat forecast");
        return m;
    }
    auto short_fallback = [&](const char* why) {
        UnivariateModel m = fit_rw_drift(series);
        m.requested = kind;
        m.notes.push_back(why);
        return m;
    };
    switch (kind) {
        case ForecasterKind::ar_aic: {
            const std::size_t cap = series.size() - 2;
            const std::size_t order = std::min(p_max.value_or(default_ar_order_max(series.size())), cap);
            return fit_ar_aic(series, order);
        }
        case ForecasterKind::rw_drift: return fit_rw_drift(series);
        case ForecasterKind::ses:
        case ForecasterKind::holt:
            if (series.size() < 4) return short_fallback("series shorter than 4; fell back to rw_drift");
            return fit_ets(series, kind == ForecasterKind::holt);
    }
    throw ArgumentError("fit_univariate: unknown kind");
}

std::vector<double> forecast(const UnivariateModel& model, std::size_t h) {
    if (h < 1) throw ArgumentError("forecast: horizon must be at least 1");
    std::vector<double> out(h);
    switch (model.kind) {
        case ForecasterKind::ar_aic: {
            std::vector<double> path = model.fitted_on;
            const std::size_t p = model.order_p;
            for (std::size_t step = 0; step < h; ++step) {
                double next = model.coefficients[0];
                for (std::size_t k = 1; k <= p; ++k) {
                    next += model.coefficients[k] * path[path.size() - k];
                }
                path.push_back(next);
                out[step] = next;
            }
            break;
        }
        case ForecasterKind::rw_drift: {
            const double last = model.fitted_on.back();
            for (std::size_t step = 0; step < h; ++step) {
                out[step] = last + static_cast<double>(step + 1) * model.coefficients[0];
            }
            break;
        }
        case ForecasterKind::ses:
            std::fill(out.begin(), out.end(), model.level);
            break;
        case ForecasterKind::holt:
            for (std::size_t step = 0; step < h; ++step) {
                out[step] = model.level + static_cast<double>(step + 1) * model.trend;
            }
            break;
    }
    return out;
}

CurveForecast to_natural_scale(const CurveForecast& forecast) {
    if (forecast.scale == Scale::natural) return forecast;
    CurveForecast out = forecast;
    for (double& v : out.point) v = std::exp(v);
    out.scale = Scale::natural;
    return out;
}

ScoreForecast forecast_scores(const FactorModel& model, ForecasterKind kind,
                              std::size_t max_horizon, std::optional<std::size_t> p_max) {
    if (max_horizon < 1) throw ArgumentError("forecast_scores: horizon must be at least 1");
    ScoreForecast out;
    const auto q = model.scores.cols();
    out.scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(max_horizon), q);
    for (Eigen::Index k = 0; k < q; ++k) {
        const Eigen::VectorXd column = model.scores.col(k);
        const std::span<const double> series(column.data(), static_cast<std::size_t>(column.size()));
        UnivariateModel fit = fit_univariate(series, kind, p_max);
        const auto path = forecast(fit, max_horizon);
        for (std::size_t h = 0; h < max_horizon; ++h) {
            out.scores(static_cast<Eigen::Index>(h), k) = path[h];
        }
        out.models.push_back(std::move(fit));
    }
    return out;
}

std::vector<CurveForecast> assemble_curves(const Decomposition& d, const FactorModel& model,
                                           const Eigen::VectorXd& score, std::size_t horizon) {
    if (static_cast<std::size_t>(score.size()) != model.q) {
        throw ArgumentError("assemble_curves: score length does not match q");
    }
    if (model.loadings.size() != d.axes.regions()) {
        throw ArgumentError("assemble_curves: factor model and decomposition disagree on N");
    }
    std::vector<CurveForecast> out;
    out.reserve(d.axes.regions());
    for (std::size_t s = 0; s < d.axes.regions(); ++s) {
        const Eigen::VectorXd curve = d.grand_effect +
                                      d.row_effects.row(static_cast<Eigen::Index>(s)).transpose() +
                                      model.loadings[s] * score;
        CurveForecast f;
        f.region_id = d.axes.region_ids[s];
        f.horizon = horizon;
        f.point.assign(curve.data(), curve.data() + curve.size());
        f.scale = d.scale;
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<CurveForecast> forecast_curves(const Decomposition& d, const FactorModel& model,
                                           ForecasterKind kind, std::size_t h) {
    const ScoreForecast scores = forecast_scores(model, kind, h);
    return assemble_curves(d, model, scores.scores.row(static_cast<Eigen::Index>(h - 1)).transpose(),
                           h);
}

}  // namespace hdconf
