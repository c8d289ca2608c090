#include "hdconf/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hdconf/error.hpp"
#include "hdconf/pinball.hpp"

namespace hdconf {

namespace {

constexpr double kGammaFloor = 1e-12;

// ceil(x) that ignores round-off just above an integer.
std::size_t ceil_count(double x) {
    return static_cast<std::size_t>(std::max(0.0, std::ceil(x - 1e-9)));
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
}

}  // namespace

std::string_view to_string(IntervalMethod method) noexcept {
    switch (method) {
        case IntervalMethod::split_sd: return "split_sd";
        case IntervalMethod::split_quantile: return "split_quantile";
        case IntervalMethod::sequential: return "sequential";
    }
    return "?";
}

IntervalMethod parse_interval_method(std::string_view text) {
    if (text == "split_sd") return IntervalMethod::split_sd;
    if (text == "split_quantile") return IntervalMethod::split_quantile;
    if (text == "sequential") return IntervalMethod::sequential;
    throw ArgumentError("unknown conformal variant '" + std::string(text) + "'");
}

Eigen::MatrixXd gamma_summary(const ResidualSet& residuals, GammaKind kind, double alpha) {
    check_alpha(alpha);
    const CurveArray& r = residuals.residuals;
    const std::size_t m = r.times();
    if (kind == GammaKind::sd && m < 2) {
        throw CalibrationError("standard-deviation summary needs at least 2 residual curves, have " +
                                   std::to_string(m),
                               residuals.horizon);
    }
    if (m < 1) throw CalibrationError("no residual curves", residuals.horizon);

    Eigen::MatrixXd gamma(static_cast<Eigen::Index>(r.rows()), static_cast<Eigen::Index>(r.ages()));
    std::vector<double> column(m);
    const std::size_t rank = std::clamp<std::size_t>(
        ceil_count((1.0 - alpha) * static_cast<double>(m + 1)), 1, m);
    for (std::size_t s = 0; s < r.rows(); ++s) {
        for (std::size_t j = 0; j < r.ages(); ++j) {
            double value = 0.0;
            if (kind == GammaKind::sd) {
                double mean = 0.0;
                for (std::size_t t = 0; t < m; ++t) mean += r(s, t, j);
                mean /= static_cast<double>(m);
                double ss = 0.0;
                for (std::size_t t = 0; t < m; ++t) ss += (r(s, t, j) - mean) * (r(s, t, j) - mean);
                value = std::sqrt(ss / static_cast<double>(m - 1));
            } else {
                for (std::size_t t = 0; t < m; ++t) column[t] = std::abs(r(s, t, j));
                std::nth_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                                 column.end());
                value = column[rank - 1];
            }
            gamma(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) =
                std::max(value, kGammaFloor);
        }
    }
    return gamma;
}

std::vector<double> conformity_ratios(const ResidualSet& residuals, const Eigen::MatrixXd& gamma) {
    const CurveArray& r = residuals.residuals;
    if (static_cast<std::size_t>(gamma.rows()) != r.rows() ||
        static_cast<std::size_t>(gamma.cols()) != r.ages()) {
        throw ArgumentError("conformity_ratios: gamma shape does not match the residuals");
    }
    std::vector<double> ratios;
    ratios.reserve(r.size());
    for (std::size_t s = 0; s < r.rows(); ++s) {
        for (std::size_t t = 0; t < r.times(); ++t) {
            for (std::size_t j = 0; j < r.ages(); ++j) {
                const double g = gamma(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j));
                if (!(g > 0.0)) throw ArgumentError("conformity_ratios: gamma must be positive");
                ratios.push_back(std::abs(r(s, t, j)) / g);
            }
        }
    }
    return ratios;
}

double validation_coverage(const ResidualSet& residuals, const Eigen::MatrixXd& gamma, double xi) {
    const auto ratios = conformity_ratios(residuals, gamma);
    if (ratios.empty()) throw CalibrationError("empty residual set", residuals.horizon);
    const auto inside = std::count_if(ratios.begin(), ratios.end(), [xi](double q) { return q <= xi; });
    return static_cast<double>(inside) / static_cast<double>(ratios.size());
}

SplitCalibration calibrate_xi(const ResidualSet& residuals, Eigen::MatrixXd gamma, double alpha,
                              GammaKind kind, Scale scale) {
    check_alpha(alpha);
    std::vector<double> ratios = conformity_ratios(residuals, gamma);
    if (ratios.empty()) throw CalibrationError("empty residual set", residuals.horizon);
    std::sort(ratios.begin(), ratios.end());
    const std::size_t needed = std::min(
        ceil_count((1.0 - alpha) * static_cast<double>(ratios.size())), ratios.size());

    SplitCalibration cal;
    cal.horizon = residuals.horizon;
    cal.xi = needed == 0 ? 0.0 : ratios[needed - 1];
    cal.alpha = alpha;
    cal.kind = kind;
    cal.scale = scale;
    const auto inside = std::upper_bound(ratios.begin(), ratios.end(), cal.xi) - ratios.begin();
    cal.coverage = static_cast<double>(inside) / static_cast<double>(ratios.size());
    cal.gamma = std::move(gamma);
    return cal;
}

IntervalSurface split_interval(const CurveForecast& point, const SplitCalibration& cal,
                               std::size_t region) {
    if (point.scale != cal.scale) {
        throw ArgumentError("split_interval: forecast is on the " + std::string(to_string(point.scale)) +
                            " scale but the calibration is on the " +
                            std::string(to_string(cal.scale)) + " scale");
    }
    if (region >= static_cast<std::size_t>(cal.gamma.rows()) ||
        point.point.size() != static_cast<std::size_t>(cal.gamma.cols())) {
        throw ArgumentError("split_interval: region or age grid does not match the calibration");
    }
    IntervalSurface out;
    out.region_id = point.region_id;
    out.horizon = point.horizon;
    out.alpha = cal.alpha;
    out.method = cal.kind == GammaKind::sd ? IntervalMethod::split_sd : IntervalMethod::split_quantile;
    out.scale = point.scale;
    out.lower.resize(point.point.size());
    out.upper.resize(point.point.size());
    for (std::size_t j = 0; j < point.point.size(); ++j) {
        const double half =
            cal.xi * cal.gamma(static_cast<Eigen::Index>(region), static_cast<Eigen::Index>(j));
        double lo = point.point[j] - half;
        if (point.scale == Scale::natural) lo = std::max(lo, 0.0);
        out.lower[j] = lo;
        out.upper[j] = point.point[j] + half;
    }
    return out;
}

namespace {

// Lagged design over responses history[first..end): row i has 1, h[i-1], ..., h[i-p].
Eigen::MatrixXd lag_design(const std::vector<double>& history, std::size_t first, std::size_t p) {
    const std::size_t n = history.size() - first;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p + 1));
    for (std::size_t i = 0; i < n; ++i) {
        x(static_cast<Eigen::Index>(i), 0) = 1.0;
        for (std::size_t k = 1; k <= p; ++k) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = history[first + i - k];
        }
    }
    return x;
}

void refit(AgeQuantileState& age, double tau) {
    const std::size_t p = age.order;
    const Eigen::MatrixXd x = lag_design(age.history, p, p);
    const std::span<const double> y(age.history.data() + p, age.history.size() - p);
    const PinballFit fit = pinball_fit(x, y, tau);
    age.coefficients.assign(fit.coefficients.data(), fit.coefficients.data() + fit.coefficients.size());
    double q = age.coefficients[0];
    for (std::size_t k = 1; k <= p; ++k) q += age.coefficients[k] * age.history[age.history.size() - k];
    age.raw_quantile = q;
}

std::size_t select_order(const std::vector<double>& history, std::size_t p_max, double tau) {
    const std::size_t n = history.size() - p_max;
    const std::span<const double> y(history.data() + p_max, n);
    double abs_sum = 0.0;
    for (double v : y) abs_sum += std::abs(v);
    const double floor = std::max(1e-12 * abs_sum, 1e-300);
    const double nd = static_cast<double>(n);
    std::size_t best_p = 0;
    double best_aic = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p <= p_max; ++p) {
        const PinballFit fit = pinball_fit(lag_design(history, p_max, p), y, tau);
        const double obj = std::max(fit.objective, floor);
        const double aic = 2.0 * nd * std::log(obj / nd) + 2.0 * static_cast<double>(p + 1);
        if (aic < best_aic) {
            best_aic = aic;
            best_p = p;
        }
    }
    return best_p;
}

}  // namespace

SequentialState sequential_init(std::span<const std::vector<double>> history_per_age,
                                const SequentialOptions& options, std::string region_id,
                                std::size_t horizon, Scale scale) {
    check_alpha(options.alpha);
    const double tau = 1.0 - options.alpha;
    const std::size_t needed = options.fixed_order.value_or(options.p_max) + 2;
    SequentialState state;
    state.region_id = std::move(region_id);
    state.horizon = horizon;
    state.alpha = options.alpha;
    state.scale = scale;
    state.ages.reserve(history_per_age.size());
    for (std::size_t j = 0; j < history_per_age.size(); ++j) {
        const auto& history = history_per_age[j];
        if (history.size() < needed) {
            throw ArgumentError("sequential_init: age index " + std::to_string(j) + " has " +
                                std::to_string(history.size()) + " residuals, needs at least " +
                                std::to_string(needed));
        }
        AgeQuantileState age;
        age.history = history;
        for (double v : age.history) {
            if (!std::isfinite(v) || v < 0.0) {
                throw ArgumentError("sequential_init: absolute residuals must be finite and >= 0");
            }
        }
        age.order = options.fixed_order ? *options.fixed_order : select_order(age.history, options.p_max, tau);
        refit(age, tau);
        state.ages.push_back(std::move(age));
    }
    return state;
}

IntervalSurface sequential_step(const SequentialState& state, const CurveForecast& point) {
    if (point.scale != state.scale) throw ArgumentError("sequential_step: scale mismatch");
    if (point.point.size() != state.ages.size()) {
        throw ArgumentError("sequential_step: forecast length does not match the state");
    }
    IntervalSurface out;
    out.region_id = point.region_id;
    out.horizon = point.horizon;
    out.alpha = state.alpha;
    out.method = IntervalMethod::sequential;
    out.scale = point.scale;
    out.lower.resize(point.point.size());
    out.upper.resize(point.point.size());
    for (std::size_t j = 0; j < point.point.size(); ++j) {
        const double q = state.ages[j].quantile();
        double lo = point.point[j] - q;
        if (point.scale == Scale::natural) lo = std::max(lo, 0.0);
        out.lower[j] = lo;
        out.upper[j] = point.point[j] + q;
    }
    return out;
}

SequentialState sequential_update(SequentialState state, std::span<const double> actual,
                                  const CurveForecast& point) {
    if (actual.size() != state.ages.size() || point.point.size() != state.ages.size()) {
        throw ArgumentError("sequential_update: curve length does not match the state");
    }
    const double tau = 1.0 - state.alpha;
    for (std::size_t j = 0; j < state.ages.size(); ++j) {
        state.ages[j].history.push_back(std::abs(actual[j] - point.point[j]));
        refit(state.ages[j], tau);
    }
    return state;
}

}  // namespace hdconf
