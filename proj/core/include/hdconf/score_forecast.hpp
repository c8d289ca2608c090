#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hdconf/factor_model.hpp"
#include "hdconf/fanova.hpp"
#include "hdconf/panel.hpp"

namespace hdconf {

enum class ForecasterKind { ar_aic, rw_drift, ses, holt };

[[nodiscard]] std::string_view to_string(ForecasterKind kind) noexcept;
[[nodiscard]] ForecasterKind parse_forecaster_kind(std::string_view text);

/// A fitted univariate forecaster.
///
/// `kind` is the model actually used; `requested` is what the caller asked for. The
/// two differ only after a recorded fallback (non-stationary AR, series too short),
/// and `notes` says why.
struct UnivariateModel {
    ForecasterKind kind = ForecasterKind::ar_aic;
    ForecasterKind requested = ForecasterKind::ar_aic;
    /// ar_aic: {intercept, phi_1..phi_p}; rw_drift: {drift}; ses: {alpha}; holt: {alpha, beta}.
    std::vector<double> coefficients;
    std::size_t order_p = 0;
    double sigma2 = 0.0;
    std::vector<double> fitted_on;
    double level = 0.0;  // final smoothed level (ses, holt)
    double trend = 0.0;  // final smoothed trend (holt)
    std::vector<std::string> notes;

    [[nodiscard]] bool fell_back() const noexcept { return kind != requested; }
};

/// min(10, floor(T / 4)).
[[nodiscard]] std::size_t default_ar_order_max(std::size_t length) noexcept;

/// AR(p) with intercept for p = 0..p_max by least squares on the common sample
/// n = length - p_max, keeping the smallest AIC = n log(RSS/n) + 2(p+2); ties keep the
/// smaller p. A non-stationary winner falls back to rw_drift.
[[nodiscard]] UnivariateModel fit_ar_aic(std::span<const double> series, std::size_t p_max);

/// Random walk with drift = mean first difference.
[[nodiscard]] UnivariateModel fit_rw_drift(std::span<const double> series);

/// Simple (trend = false) or Holt linear (trend = true) exponential smoothing with
/// parameters grid-searched over {0.01, ..., 0.99} by in-sample one-step squared error.
[[nodiscard]] UnivariateModel fit_ets(std::span<const double> series, bool trend);

/// Exponential smoothing with fixed parameters.
[[nodiscard]] UnivariateModel make_ses(std::span<const double> series, double alpha);
[[nodiscard]] UnivariateModel make_holt(std::span<const double> series, double alpha, double beta);

/// Fits `kind`, falling back to simpler models when the series is too short.
[[nodiscard]] UnivariateModel fit_univariate(std::span<const double> series, ForecasterKind kind,
                                             std::optional<std::size_t> p_max = std::nullopt);

/// Iterated 1..h step forecasts.
[[nodiscard]] std::vector<double> forecast(const UnivariateModel& model, std::size_t h);

struct CurveForecast {
    std::string region_id;
    std::size_t horizon = 1;
    std::vector<double> point;
    Scale scale = Scale::log;
};

[[nodiscard]] CurveForecast to_natural_scale(const CurveForecast& forecast);

/// Independent per-column forecasts of the factor scores.
struct ScoreForecast {
    Eigen::MatrixXd scores;  // H x q, row h-1 is the h-step forecast
    std::vector<UnivariateModel> models;
};

[[nodiscard]] ScoreForecast forecast_scores(const FactorModel& model, ForecasterKind kind,
                                            std::size_t max_horizon,
                                            std::optional<std::size_t> p_max = std::nullopt);

/// grand + row_s + loadings_s * score for every region, log scale.
[[nodiscard]] std::vector<CurveForecast> assemble_curves(const Decomposition& d,
                                                         const FactorModel& model,
                                                         const Eigen::VectorXd& score,
                                                         std::size_t horizon);

/// h-step curve forecasts for every region.
[[nodiscard]] std::vector<CurveForecast> forecast_curves(const Decomposition& d,
                                                         const FactorModel& model,
                                                         ForecasterKind kind, std::size_t h);

}  // namespace hdconf
