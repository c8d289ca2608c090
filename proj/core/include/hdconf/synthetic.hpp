#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "hdconf/panel.hpp"

namespace hdconf {

/// Generator settings for a panel theta(u) + delta_s(u) + Lambda_s(u)'G_t + noise,
/// with G_t a q-dimensional AR(1) with a common coefficient.
struct SyntheticSpec {
    std::size_t regions = 10;
    std::size_t times = 40;
    std::size_t ages = 21;
    std::size_t factors = 2;
    double ar_coefficient = 0.8;
    double innovation_sd = 1.0;
    double loading_scale = 0.1;
    double noise_sd = 0.01;
    bool grand_effect = true;
    double row_effect_sd = 0.2;
    int first_year = 1;

    /// Throws ConfigError for empty dimensions, |ar_coefficient| >= 1 or negative scales.
    void validate() const;
};

/// Ground-truth components behind a synthetic panel.
struct SyntheticTruth {
    std::size_t factors = 0;
    Eigen::VectorXd grand_effect;               // J
    Eigen::MatrixXd row_effects;                // N x J
    std::vector<Eigen::MatrixXd> loadings;      // N matrices of J x q
    Eigen::MatrixXd scores;                     // T x q

    /// theta + delta_s + Lambda_s G_t at one cell, summed in generation order.
    [[nodiscard]] double signal(std::size_t s, std::size_t t, std::size_t j) const;
};

struct SyntheticPanel {
    FunctionalPanel panel;
    SyntheticTruth truth;
};

/// Deterministic for a fixed (spec, seed). The panel is flagged as log scale.
[[nodiscard]] SyntheticPanel synthesize_panel(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace hdconf
