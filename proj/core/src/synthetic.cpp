#include "hdconf/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

#include "hdconf/error.hpp"

namespace hdconf {

void SyntheticSpec::validate() const {
    if (regions == 0 || times == 0 || ages == 0) {
        throw ConfigError("synthetic spec: regions, times and ages must be at least 1");
    }
    if (!(std::abs(ar_coefficient) < 1.0)) {
        throw ConfigError("synthetic spec: AR coefficient must satisfy |phi| < 1 (got " +
                          std::to_string(ar_coefficient) + ")");
    }
    if (!(noise_sd >= 0.0) || !(innovation_sd >= 0.0) || !(loading_scale >= 0.0) ||
        !(row_effect_sd >= 0.0)) {
        throw ConfigError("synthetic spec: scales must be non-negative");
    }
}

double SyntheticTruth::signal(std::size_t s, std::size_t t, std::size_t j) const {
    const auto js = static_cast<Eigen::Index>(j);
    double value = grand_effect(js) + row_effects(static_cast<Eigen::Index>(s), js);
    for (std::size_t k = 0; k < factors; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        value += loadings[s](js, kk) * scores(static_cast<Eigen::Index>(t), kk);
    }
    return value;
}

SyntheticPanel synthesize_panel(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const auto n = static_cast<Eigen::Index>(spec.regions);
    const auto t_len = static_cast<Eigen::Index>(spec.times);
    const auto j_len = static_cast<Eigen::Index>(spec.ages);
    const auto q = static_cast<Eigen::Index>(spec.factors);

    std::vector<double> x(spec.ages, 0.0);
    for (std::size_t j = 0; j < spec.ages && spec.ages > 1; ++j) {
        x[j] = static_cast<double>(j) / static_cast<double>(spec.ages - 1);
    }

    SyntheticTruth truth;
    truth.factors = spec.factors;
    truth.grand_effect = Eigen::VectorXd::Zero(j_len);
    if (spec.grand_effect) {
        for (Eigen::Index j = 0; j < j_len; ++j) {
            const double u = x[static_cast<std::size_t>(j)];
            truth.grand_effect(j) = -7.0 + 6.0 * u + 2.0 * std::exp(-12.0 * u);
        }
    }

    truth.row_effects = Eigen::MatrixXd::Zero(n, j_len);
    for (Eigen::Index s = 0; s < n; ++s) {
        const double level = spec.row_effect_sd * normal(rng);
        const double slope = spec.row_effect_sd * normal(rng);
        for (Eigen::Index j = 0; j < j_len; ++j) {
            truth.row_effects(s, j) = level + slope * (x[static_cast<std::size_t>(j)] - 0.5);
        }
    }

    // Factor k mixes two cosine shapes so that loadings differ across factors.
    truth.loadings.assign(spec.regions, Eigen::MatrixXd::Zero(j_len, q));
    for (Eigen::Index s = 0; s < n; ++s) {
        for (Eigen::Index k = 0; k < q; ++k) {
            const double a = normal(rng);
            const double b = normal(rng);
            for (Eigen::Index j = 0; j < j_len; ++j) {
                const double u = x[static_cast<std::size_t>(j)];
                const double kd = static_cast<double>(k);
                truth.loadings[static_cast<std::size_t>(s)](j, k) =
                    spec.loading_scale * (a * std::cos(std::numbers::pi * kd * u) +
                                          0.5 * b * std::cos(std::numbers::pi * (kd + 1.0) * u));
            }
        }
    }

    truth.scores = Eigen::MatrixXd::Zero(t_len, q);
    const double phi = spec.ar_coefficient;
    const double stationary_sd = spec.innovation_sd / std::sqrt(1.0 - phi * phi);
    for (Eigen::Index k = 0; k < q; ++k) {
        double g = stationary_sd * normal(rng);
        for (Eigen::Index t = 0; t < t_len; ++t) {
            if (t > 0) g = phi * g + spec.innovation_sd * normal(rng);
            truth.scores(t, k) = g;
        }
    }

    CurveArray values(spec.regions, spec.times, spec.ages);
    for (std::size_t s = 0; s < spec.regions; ++s) {
        for (std::size_t t = 0; t < spec.times; ++t) {
            for (std::size_t j = 0; j < spec.ages; ++j) {
                double v = truth.signal(s, t, j);
                if (spec.noise_sd > 0.0) v += spec.noise_sd * normal(rng);
                values(s, t, j) = v;
            }
        }
    }

    PanelAxes axes;
    for (std::size_t s = 0; s < spec.regions; ++s) {
        char id[16];
        std::snprintf(id, sizeof id, "R%02zu", s + 1);
        axes.region_ids.emplace_back(id);
    }
    axes.years = consecutive_years(spec.first_year, spec.times);
    axes.age_grid = integer_age_grid(spec.ages);
    return {FunctionalPanel(std::move(axes), std::move(values), Scale::log), std::move(truth)};
}

}  // namespace hdconf
