#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdconf/conformal.hpp"
#include "hdconf/factor_model.hpp"
#include "hdconf/fanova.hpp"
#include "hdconf/panel.hpp"
#include "hdconf/score_forecast.hpp"

namespace hdconf {

/// Decomposition plus score forecaster; every pipeline is crossed with every
/// conformal variant of the plan.
struct PipelineSpec {
    DecompositionMethod decomposition = DecompositionMethod::median_polish;
    ForecasterKind forecaster = ForecasterKind::ar_aic;

    /// "<forecaster>/<decomposition>", e.g. "ar_aic/median_polish".
    [[nodiscard]] std::string label() const;

    bool operator==(const PipelineSpec&) const = default;
};

/// Expanding-window protocol: training first_year..train_end_year, validation
/// train_end_year+1..validation_end_year, test validation_end_year+1..test_end_year.
struct BacktestPlan {
    int first_year = 0;
    int train_end_year = 0;
    int validation_end_year = 0;
    int test_end_year = 0;
    std::size_t max_horizon = 10;
    double alpha = 0.05;
    std::vector<PipelineSpec> pipelines{PipelineSpec{}};
    std::vector<IntervalMethod> variants{IntervalMethod::split_sd, IntervalMethod::split_quantile,
                                         IntervalMethod::sequential};
    std::string sex = "T";
    std::size_t sequential_p_max = 3;
    std::optional<std::size_t> ar_order_max;
    FactorModelOptions factor;
    MedianPolishOptions polish;

    [[nodiscard]] std::size_t training_years() const noexcept;
    [[nodiscard]] std::size_t validation_years() const noexcept;
    [[nodiscard]] std::size_t test_years() const noexcept;
    [[nodiscard]] bool uses_split() const noexcept;
    [[nodiscard]] bool uses_sequential() const noexcept;

    /// Throws ConfigError unless the periods are ordered and non-empty (validation may
    /// be empty when no split variant is requested), 1 <= max_horizon <= test length,
    /// alpha lies in (0, 1) and the pipeline and variant lists are non-empty and unique.
    void validate() const;
    /// validate() plus the years lying inside the panel.
    void validate_against(const PanelAxes& axes) const;
};

/// 60/20/20-style split of first_year..last_year: training gets round(share * T) years,
/// validation round(validation_share * T), test the rest.
[[nodiscard]] BacktestPlan proportional_plan(int first_year, int last_year, double train_share = 0.6,
                                             double validation_share = 0.2);

/// h-step point forecast from one origin, log scale.
struct ForecastRecord {
    std::size_t pipeline = 0;
    std::size_t region = 0;
    std::size_t horizon = 1;
    int origin_year = 0;
    int target_year = 0;
    std::vector<double> point_log;
};

/// Test-period interval together with the realized curve, natural scale.
struct IntervalRecord {
    std::size_t pipeline = 0;
    std::size_t region = 0;
    std::size_t horizon = 1;
    int origin_year = 0;
    int target_year = 0;
    IntervalSurface interval;
    std::vector<double> actual;
};

struct CalibrationRecord {
    std::size_t pipeline = 0;
    IntervalMethod method = IntervalMethod::split_sd;
    ResidualSet residuals;
    SplitCalibration calibration;
};

/// A (pipeline, variant, horizon) cell that produced no intervals.
struct BacktestGap {
    std::size_t pipeline = 0;
    IntervalMethod method = IntervalMethod::split_sd;
    std::size_t horizon = 1;
    std::string reason;
};

struct BacktestResult {
    PanelAxes axes;  // years restricted to the plan
    BacktestPlan plan;
    std::vector<ForecastRecord> forecasts;  // origins train_end_year..test_end_year-1
    std::vector<IntervalRecord> intervals;
    std::vector<CalibrationRecord> calibrations;
    std::vector<BacktestGap> gaps;
    std::vector<std::string> notes;
};

/// Refits decomposition, factor model and score forecasts at every origin, calibrates
/// split conformal on the validation period and runs sequential conformal from the
/// third curve onwards, then emits test-period intervals. Results are ordered by
/// pipeline, variant, horizon, region and origin regardless of `threads`
/// (0 = hardware concurrency).
[[nodiscard]] BacktestResult expanding_backtest(const FunctionalPanel& log_panel,
                                                const BacktestPlan& plan, std::size_t threads = 0);

struct RegionMetric {
    std::string method;
    std::string sex;
    IntervalMethod variant = IntervalMethod::split_sd;
    std::size_t horizon = 1;
    std::string region;
    double ecp = 0.0;
    double cpd = 0.0;
    double score = 0.0;
    std::size_t terms = 0;
};

/// ECP, CPD and mean interval score per (pipeline, variant, horizon, region).
[[nodiscard]] std::vector<RegionMetric> region_metrics(const BacktestResult& result);

struct MetricCell {
    bool present = false;
    double ecp = 0.0;
    double cpd = 0.0;
    double score = 0.0;
    std::size_t count = 0;  // regions (horizon rows) or horizons (Mean row) averaged
};

struct ReportRow {
    std::string method;
    std::string sex;
    std::optional<std::size_t> horizon;  // empty for the Mean row
    std::vector<MetricCell> cells;       // parallel to EvaluationReport::variants
};

struct EvaluationReport {
    std::vector<IntervalMethod> variants;
    std::vector<ReportRow> rows;
    std::vector<RegionMetric> regions;

    [[nodiscard]] const ReportRow* find(std::string_view method, std::string_view sex,
                                        std::optional<std::size_t> horizon) const;
    [[nodiscard]] std::size_t variant_index(IntervalMethod variant) const;
};

/// Unweighted means over regions per (method, sex, horizon), followed by a Mean row
/// per (method, sex) averaging the horizon rows. Missing cells are left absent and
/// excluded from the Mean row. Rows cover horizons 1..max_horizon (0: the largest
/// horizon present); methods and sexes keep their order of first appearance.
[[nodiscard]] EvaluationReport aggregate_report(std::span<const RegionMetric> metrics,
                                                std::span<const IntervalMethod> variants,
                                                std::size_t max_horizon = 0);

[[nodiscard]] EvaluationReport evaluate(const BacktestResult& result);

}  // namespace hdconf
