#include "hdconf/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "hdconf/error.hpp"
#include "hdconf/metrics.hpp"
#include "parallel.hpp"

namespace hdconf {

std::string PipelineSpec::label() const {
    return std::string(to_string(forecaster)) + "/" + std::string(to_string(decomposition));
}

std::size_t BacktestPlan::training_years() const noexcept {
    return static_cast<std::size_t>(std::max(0, train_end_year - first_year + 1));
}

std::size_t BacktestPlan::validation_years() const noexcept {
    return static_cast<std::size_t>(std::max(0, validation_end_year - train_end_year));
}

std::size_t BacktestPlan::test_years() const noexcept {
    return static_cast<std::size_t>(std::max(0, test_end_year - validation_end_year));
}

bool BacktestPlan::uses_split() const noexcept {
    return std::any_of(variants.begin(), variants.end(),
                       [](IntervalMethod m) { return m != IntervalMethod::sequential; });
}

bool BacktestPlan::uses_sequential() const noexcept {
    return std::find(variants.begin(), variants.end(), IntervalMethod::sequential) != variants.end();
}

void BacktestPlan::validate() const {
    if (train_end_year < first_year) {
        throw ConfigError("training period " + std::to_string(first_year) + "-" +
                          std::to_string(train_end_year) + " is empty");
    }
    if (training_years() < 2) throw ConfigError("training period needs at least 2 years");
    if (validation_end_year < train_end_year) {
        throw ConfigError("validation period must follow the training period");
    }
    if (validation_end_year == train_end_year && uses_split()) {
        throw ConfigError("split conformal variants need a non-empty validation period");
    }
    if (test_end_year <= validation_end_year) throw ConfigError("test period is empty");
    if (max_horizon < 1) throw ConfigError("horizons must include h = 1");
    if (max_horizon > test_years()) {
        throw ConfigError("max horizon " + std::to_string(max_horizon) + " exceeds the test length " +
                          std::to_string(test_years()));
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (pipelines.empty()) throw ConfigError("no pipelines configured");
    if (variants.empty()) throw ConfigError("no conformal variants configured");
    for (std::size_t i = 0; i < pipelines.size(); ++i) {
        for (std::size_t k = 0; k < i; ++k) {
            if (pipelines[i] == pipelines[k]) throw ConfigError("duplicate pipeline " + pipelines[i].label());
        }
    }
    if (std::set<IntervalMethod>(variants.begin(), variants.end()).size() != variants.size()) {
        throw ConfigError("duplicate conformal variant");
    }
}

void BacktestPlan::validate_against(const PanelAxes& axes) const {
    validate();
    if (axes.years.empty() || first_year < axes.years.front() || test_end_year > axes.years.back()) {
        std::ostringstream msg;
        msg << "plan years " << first_year << "-" << test_end_year << " are not covered by the panel";
        if (!axes.years.empty()) msg << " (" << axes.years.front() << "-" << axes.years.back() << ")";
        throw ConfigError(msg.str());
    }
}

BacktestPlan proportional_plan(int first_year, int last_year, double train_share,
                               double validation_share) {
    if (last_year < first_year) throw ConfigError("proportional_plan: empty year range");
    const double total = static_cast<double>(last_year - first_year + 1);
    BacktestPlan plan;
    plan.first_year = first_year;
    plan.train_end_year = first_year + static_cast<int>(std::lround(train_share * total)) - 1;
    plan.validation_end_year = plan.train_end_year + static_cast<int>(std::lround(validation_share * total));
    plan.test_end_year = last_year;
    plan.max_horizon = std::min<std::size_t>(10, plan.test_years());
    return plan;
}

namespace {

// Point forecasts of one origin: N x H x J on the log scale.
struct OriginForecast {
    CurveArray points;
    std::size_t fallbacks = 0;
    std::size_t models = 0;
};

OriginForecast forecast_origin(const FunctionalPanel& panel, std::size_t origin, std::size_t horizons,
                               const PipelineSpec& pipeline, const BacktestPlan& plan,
                               const std::vector<double>& quadrature) {
    const FunctionalPanel train = panel.leading_years(origin + 1);
    const Decomposition d = decompose(train, pipeline.decomposition, plan.polish);
    FactorModelOptions options = plan.factor;
    const std::size_t t_len = train.times();
    if (options.q_override) options.q_override = std::min(*options.q_override, t_len);
    if (options.q_max) options.q_max = std::min(*options.q_max, t_len);
    const FactorModel fm = fit_factor_model(d.residuals, quadrature, options);
    const ScoreForecast sf = forecast_scores(fm, pipeline.forecaster, horizons, plan.ar_order_max);

    OriginForecast out{CurveArray(panel.regions(), horizons, panel.ages()), 0, sf.models.size()};
    for (const auto& m : sf.models) out.fallbacks += m.fell_back() ? 1 : 0;
    for (std::size_t h = 1; h <= horizons; ++h) {
        const Eigen::VectorXd score = sf.scores.row(static_cast<Eigen::Index>(h - 1)).transpose();
        const auto curves = assemble_curves(d, fm, score, h);
        for (std::size_t s = 0; s < curves.size(); ++s) {
            std::copy(curves[s].point.begin(), curves[s].point.end(), out.points.curve(s, h - 1).begin());
        }
    }
    return out;
}

std::string context(const BacktestPlan& plan, std::size_t pipeline, int year, const char* what) {
    return plan.pipelines[pipeline].label() + ", " + what + " " + std::to_string(year);
}

}  // namespace

BacktestResult expanding_backtest(const FunctionalPanel& log_panel, const BacktestPlan& plan,
                                  std::size_t threads) {
    if (log_panel.scale() != Scale::log) throw ArgumentError("expanding_backtest: panel must be on the log scale");
    plan.validate_against(log_panel.axes());
    const FunctionalPanel panel = log_panel.year_range(plan.first_year, plan.test_end_year);
    const FunctionalPanel natural = panel.exponentiated();
    const std::size_t n_regions = panel.regions();
    const std::size_t n_ages = panel.ages();
    const std::size_t e = plan.training_years() - 1;       // jump-off index of the first validation forecast
    const std::size_t v = e + plan.validation_years();     // last validation index
    const std::size_t z = panel.times() - 1;               // last test index
    const std::size_t H = plan.max_horizon;
    const std::size_t first_origin = plan.uses_sequential() ? 1 : e;
    const auto quadrature = trapezoid_weights(panel.age_grid());
    const int year0 = panel.years().front();

    BacktestResult result;
    result.axes = panel.axes();
    result.plan = plan;

    // Point forecasts for every (pipeline, origin).
    const std::size_t n_pipes = plan.pipelines.size();
    const std::size_t n_origins = z - first_origin;
    std::vector<OriginForecast> cache(n_pipes * n_origins);
    detail::parallel_for(cache.size(), threads, [&](std::size_t task) {
        const std::size_t p = task / n_origins;
        const std::size_t o = first_origin + task % n_origins;
        try {
            cache[task] = forecast_origin(panel, o, std::min(H, z - o), plan.pipelines[p], plan, quadrature);
        } catch (const Error& err) {
            throw NumericalError(context(plan, p, year0 + static_cast<int>(o), "origin") + ": " + err.what());
        }
    });
    auto point_log = [&](std::size_t p, std::size_t o, std::size_t h, std::size_t s) {
        return cache[p * n_origins + (o - first_origin)].points.curve(s, h - 1);
    };
    auto natural_point = [&](std::size_t p, std::size_t o, std::size_t h, std::size_t s) {
        CurveForecast f;
        f.region_id = panel.region_ids()[s];
        f.horizon = h;
        f.scale = Scale::natural;
        const auto src = point_log(p, o, h, s);
        f.point.resize(src.size());
        std::transform(src.begin(), src.end(), f.point.begin(), [](double x) { return std::exp(x); });
        return f;
    };

    for (std::size_t p = 0; p < n_pipes; ++p) {
        std::size_t fallbacks = 0;
        std::size_t models = 0;
        for (std::size_t o = e; o < z; ++o) {
            const auto& c = cache[p * n_origins + (o - first_origin)];
            fallbacks += c.fallbacks;
            models += c.models;
            for (std::size_t h = 1; h <= std::min(H, z - o); ++h) {
                for (std::size_t s = 0; s < n_regions; ++s) {
                    const auto src = point_log(p, o, h, s);
                    result.forecasts.push_back({p, s, h, year0 + static_cast<int>(o),
                                                year0 + static_cast<int>(o + h),
                                                std::vector<double>(src.begin(), src.end())});
                }
            }
        }
        if (fallbacks > 0) {
            result.notes.push_back(plan.pipelines[p].label() + ": " + std::to_string(fallbacks) + " of " +
                                   std::to_string(models) +
                                   " score models fell back to rw_drift");
        }
    }

    struct CellKey {
        std::size_t pipeline;
        IntervalMethod method;
        std::size_t horizon;
    };
    std::vector<CellKey> cells;
    for (std::size_t p = 0; p < n_pipes; ++p) {
        for (IntervalMethod m : plan.variants) {
            for (std::size_t h = 1; h <= H; ++h) cells.push_back({p, m, h});
        }
    }

    struct CellOutput {
        std::vector<IntervalRecord> intervals;
        std::optional<CalibrationRecord> calibration;
        std::optional<BacktestGap> gap;
    };
    std::vector<CellOutput> outputs(cells.size());

    auto test_record = [&](std::size_t p, std::size_t s, std::size_t h, std::size_t o, IntervalSurface iv) {
        IntervalRecord rec;
        rec.pipeline = p;
        rec.region = s;
        rec.horizon = h;
        rec.origin_year = year0 + static_cast<int>(o);
        rec.target_year = year0 + static_cast<int>(o + h);
        rec.interval = std::move(iv);
        const auto actual = natural.curve(s, o + h);
        rec.actual.assign(actual.begin(), actual.end());
        return rec;
    };

    detail::parallel_for(cells.size(), threads, [&](std::size_t c) {
        const auto [p, method, h] = cells[c];
        CellOutput& out = outputs[c];
        if (method != IntervalMethod::sequential) {
            const GammaKind kind = method == IntervalMethod::split_sd ? GammaKind::sd : GammaKind::quantile;
            const std::size_t m_count = v >= e + h ? v - e - h + 1 : 0;
            const std::size_t needed = kind == GammaKind::sd ? 2 : 1;
            if (m_count < needed) {
                out.gap = BacktestGap{p, method, h,
                                      std::to_string(m_count) + " validation residual curve(s) at h = " +
                                          std::to_string(h) + ", need " + std::to_string(needed)};
                return;
            }
            ResidualSet rs{h, CurveArray(n_regions, m_count, n_ages)};
            for (std::size_t m = 0; m < m_count; ++m) {
                const std::size_t o = e + m;
                for (std::size_t s = 0; s < n_regions; ++s) {
                    const auto pt = point_log(p, o, h, s);
                    const auto actual = natural.curve(s, o + h);
                    for (std::size_t j = 0; j < n_ages; ++j) {
                        rs.residuals(s, m, j) = actual[j] - std::exp(pt[j]);
                    }
                }
            }
            Eigen::MatrixXd gamma = gamma_summary(rs, kind, plan.alpha);
            SplitCalibration cal = calibrate_xi(rs, std::move(gamma), plan.alpha, kind, Scale::natural);
            for (std::size_t s = 0; s < n_regions; ++s) {
                for (std::size_t o = v; o + h <= z; ++o) {
                    out.intervals.push_back(test_record(p, s, h, o, split_interval(natural_point(p, o, h, s), cal, s)));
                }
            }
            out.calibration = CalibrationRecord{p, method, std::move(rs), std::move(cal)};
            return;
        }

        // Sequential: residual targets t = 1 + h .. v form the initial history.
        const std::size_t history = v >= 1 + h ? v - h : 0;
        if (history < 2) {
            out.gap = BacktestGap{p, method, h,
                                  std::to_string(history) + " residual curve(s) before the test period at h = " +
                                      std::to_string(h) + ", need 2"};
            return;
        }
        SequentialOptions options;
        options.alpha = plan.alpha;
        options.p_max = std::min(plan.sequential_p_max, history - 2);
        for (std::size_t s = 0; s < n_regions; ++s) {
            std::vector<std::vector<double>> ages(n_ages);
            for (std::size_t t = 1 + h; t <= v; ++t) {
                const auto pt = point_log(p, t - h, h, s);
                const auto actual = natural.curve(s, t);
                for (std::size_t j = 0; j < n_ages; ++j) ages[j].push_back(std::abs(actual[j] - std::exp(pt[j])));
            }
            SequentialState state;
            try {
                state = sequential_init(ages, options, panel.region_ids()[s], h, Scale::natural);
            } catch (const Error& err) {
                throw NumericalError(context(plan, p, year0 + static_cast<int>(v), "origin") + ", region " +
                                     panel.region_ids()[s] + ": " + err.what());
            }
            for (std::size_t o = v; o + h <= z; ++o) {
                out.intervals.push_back(test_record(p, s, h, o, sequential_step(state, natural_point(p, o, h, s))));
                if (o + 1 + h <= z) {
                    const auto actual = natural.curve(s, o + 1);
                    state = sequential_update(std::move(state), actual, natural_point(p, o + 1 - h, h, s));
                }
            }
        }
    });

    for (auto& out : outputs) {
        for (auto& rec : out.intervals) result.intervals.push_back(std::move(rec));
        if (out.calibration) result.calibrations.push_back(std::move(*out.calibration));
        if (out.gap) result.gaps.push_back(std::move(*out.gap));
    }
    return result;
}

std::vector<RegionMetric> region_metrics(const BacktestResult& result) {
    const auto& plan = result.plan;
    // Records are contiguous per (pipeline, variant, horizon, region).
    std::vector<RegionMetric> metrics;
    std::size_t i = 0;
    const auto& recs = result.intervals;
    while (i < recs.size()) {
        std::size_t k = i;
        while (k < recs.size() && recs[k].pipeline == recs[i].pipeline &&
               recs[k].interval.method == recs[i].interval.method && recs[k].horizon == recs[i].horizon &&
               recs[k].region == recs[i].region) {
            ++k;
        }
        std::vector<IntervalSurface> ivs;
        std::vector<std::vector<double>> actuals;
        for (std::size_t r = i; r < k; ++r) {
            ivs.push_back(recs[r].interval);
            actuals.push_back(recs[r].actual);
        }
        const CoverageCounts counts = coverage_counts(ivs, actuals);
        RegionMetric m;
        m.method = plan.pipelines[recs[i].pipeline].label();
        m.sex = plan.sex;
        m.variant = recs[i].interval.method;
        m.horizon = recs[i].horizon;
        m.region = result.axes.region_ids[recs[i].region];
        m.ecp = counts.ecp();
        m.cpd = std::abs(counts.exceedance() - plan.alpha);
        m.score = mean_interval_score(ivs, actuals, plan.alpha);
        m.terms = counts.total();
        metrics.push_back(std::move(m));
        i = k;
    }
    return metrics;
}

const ReportRow* EvaluationReport::find(std::string_view method, std::string_view sex,
                                        std::optional<std::size_t> horizon) const {
    for (const auto& row : rows) {
        if (row.method == method && row.sex == sex && row.horizon == horizon) return &row;
    }
    return nullptr;
}

std::size_t EvaluationReport::variant_index(IntervalMethod variant) const {
    const auto it = std::find(variants.begin(), variants.end(), variant);
    if (it == variants.end()) throw ArgumentError("report has no column for " + std::string(to_string(variant)));
    return static_cast<std::size_t>(it - variants.begin());
}

EvaluationReport aggregate_report(std::span<const RegionMetric> metrics,
                                  std::span<const IntervalMethod> variants, std::size_t max_horizon) {
    EvaluationReport report;
    report.variants.assign(variants.begin(), variants.end());
    report.regions.assign(metrics.begin(), metrics.end());

    std::vector<std::pair<std::string, std::string>> groups;
    std::size_t top = max_horizon;
    for (const auto& m : metrics) {
        if (std::find(variants.begin(), variants.end(), m.variant) == variants.end()) {
            throw ArgumentError("aggregate_report: metric for unlisted variant " + std::string(to_string(m.variant)));
        }
        const std::pair key{m.method, m.sex};
        if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
        if (max_horizon == 0) top = std::max(top, m.horizon);
    }

    for (const auto& [method, sex] : groups) {
        std::vector<ReportRow> horizon_rows;
        for (std::size_t h = 1; h <= top; ++h) {
            ReportRow row{method, sex, h, std::vector<MetricCell>(variants.size())};
            for (std::size_t vi = 0; vi < variants.size(); ++vi) {
                MetricCell& cell = row.cells[vi];
                for (const auto& m : metrics) {
                    if (m.method != method || m.sex != sex || m.horizon != h || m.variant != variants[vi]) continue;
                    cell.ecp += m.ecp;
                    cell.cpd += m.cpd;
                    cell.score += m.score;
                    ++cell.count;
                }
                if (cell.count > 0) {
                    const double n = static_cast<double>(cell.count);
                    cell.present = true;
                    cell.ecp /= n;
                    cell.cpd /= n;
                    cell.score /= n;
                }
            }
            horizon_rows.push_back(std::move(row));
        }
        ReportRow mean{method, sex, std::nullopt, std::vector<MetricCell>(variants.size())};
        for (std::size_t vi = 0; vi < variants.size(); ++vi) {
            MetricCell& cell = mean.cells[vi];
            for (const auto& row : horizon_rows) {
                if (!row.cells[vi].present) continue;
                cell.ecp += row.cells[vi].ecp;
                cell.cpd += row.cells[vi].cpd;
                cell.score += row.cells[vi].score;
                ++cell.count;
            }
            if (cell.count > 0) {
                const double n = static_cast<double>(cell.count);
                cell.present = true;
                cell.ecp /= n;
                cell.cpd /= n;
                cell.score /= n;
            }
        }
        for (auto& row : horizon_rows) report.rows.push_back(std::move(row));
        report.rows.push_back(std::move(mean));
    }
    return report;
}

EvaluationReport evaluate(const BacktestResult& result) {
    const auto metrics = region_metrics(result);
    return aggregate_report(metrics, result.plan.variants, result.plan.max_horizon);
}

}  // namespace hdconf
