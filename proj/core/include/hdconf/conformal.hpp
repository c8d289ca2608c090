#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hdconf/curve_array.hpp"
#include "hdconf/panel.hpp"
#include "hdconf/score_forecast.hpp"

namespace hdconf {

enum class GammaKind { sd, quantile };
enum class IntervalMethod { split_sd, split_quantile, sequential };

[[nodiscard]] std::string_view to_string(IntervalMethod method) noexcept;
[[nodiscard]] IntervalMethod parse_interval_method(std::string_view text);

/// Validation residual curves actual - forecast at one horizon: N regions x M years x J ages.
struct ResidualSet {
    std::size_t horizon = 1;
    CurveArray residuals;

    [[nodiscard]] std::size_t count() const noexcept { return residuals.times(); }
};

/// Per-region pointwise spread of the residuals (N x J), floored at 1e-12.
///
/// sd: sample standard deviation with denominator M - 1 (needs M >= 2).
/// quantile: order statistic of |residual| at rank ceil((1 - alpha)(M + 1)), clamped to M.
[[nodiscard]] Eigen::MatrixXd gamma_summary(const ResidualSet& residuals, GammaKind kind,
                                            double alpha);

/// Split-conformal calibration pooled over regions and ages for one horizon.
struct SplitCalibration {
    std::size_t horizon = 1;
    Eigen::MatrixXd gamma;  // N x J
    double xi = 0.0;
    double alpha = 0.05;
    GammaKind kind = GammaKind::sd;
    Scale scale = Scale::natural;
    double coverage = 1.0;  // pooled validation coverage at xi
};

/// |residual| / gamma for every (region, year, age) triple.
[[nodiscard]] std::vector<double> conformity_ratios(const ResidualSet& residuals,
                                                    const Eigen::MatrixXd& gamma);

/// Fraction of triples with |residual| / gamma <= xi.
[[nodiscard]] double validation_coverage(const ResidualSet& residuals, const Eigen::MatrixXd& gamma,
                                         double xi);

/// Smallest xi among {0} and the conformity ratios whose pooled coverage is >= 1 - alpha.
[[nodiscard]] SplitCalibration calibrate_xi(const ResidualSet& residuals, Eigen::MatrixXd gamma,
                                            double alpha, GammaKind kind,
                                            Scale scale = Scale::natural);

/// Pointwise prediction interval for one region, horizon and method.
struct IntervalSurface {
    std::string region_id;
    std::size_t horizon = 1;
    std::vector<double> lower;
    std::vector<double> upper;
    double alpha = 0.05;
    IntervalMethod method = IntervalMethod::split_sd;
    Scale scale = Scale::natural;
};

/// point -/+ xi * gamma[region]; the lower bound is floored at 0 on the natural scale.
[[nodiscard]] IntervalSurface split_interval(const CurveForecast& point, const SplitCalibration& cal,
                                             std::size_t region);

struct SequentialOptions {
    double alpha = 0.05;
    std::size_t p_max = 3;
    /// Skip AIC selection and use this lag order.
    std::optional<std::size_t> fixed_order;
};

/// Quantile autoregression state of one age.
struct AgeQuantileState {
    std::vector<double> history;  // absolute residuals, append-only
    std::size_t order = 0;
    std::vector<double> coefficients;  // intercept, then lags 1..order
    double raw_quantile = 0.0;

    [[nodiscard]] double quantile() const noexcept { return raw_quantile > 0.0 ? raw_quantile : 0.0; }
};

struct SequentialState {
    std::string region_id;
    std::size_t horizon = 1;
    double alpha = 0.05;
    Scale scale = Scale::natural;
    std::vector<AgeQuantileState> ages;
};

/// Selects the lag order per age by AIC on the pinball objective,
/// 2n log(obj / n) + 2(p + 1) on the common sample, fits the (1 - alpha) quantile
/// autoregression and predicts the next quantile. Each history needs at least
/// p_max + 2 values (fixed_order + 2 when set).
[[nodiscard]] SequentialState sequential_init(std::span<const std::vector<double>> history_per_age,
                                              const SequentialOptions& options,
                                              std::string region_id = {}, std::size_t horizon = 1,
                                              Scale scale = Scale::natural);

/// point -/+ predicted quantile (negative predictions clamped to 0). Does not modify the state.
[[nodiscard]] IntervalSurface sequential_step(const SequentialState& state, const CurveForecast& point);

/// Appends |actual - point| per age, refits the coefficients at the same lag order and
/// predicts the next quantile.
[[nodiscard]] SequentialState sequential_update(SequentialState state, std::span<const double> actual,
                                                const CurveForecast& point);

}  // namespace hdconf
