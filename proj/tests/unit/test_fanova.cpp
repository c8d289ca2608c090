#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hdconf/error.hpp"
#include "hdconf/fanova.hpp"
#include "oracles.hpp"

using namespace hdconf;

namespace {

std::vector<double> pm(std::vector<std::vector<double>> curves) {
    std::vector<std::span<const double>> views(curves.begin(), curves.end());
    return pointwise_median(views);
}

}  // namespace

TEST(PointwiseMedian, OddCount) {
    EXPECT_EQ(pm({{1, 5}, {3, 3}, {2, 9}}), (std::vector<double>{2, 5}));
}

TEST(PointwiseMedian, EvenCountTakesMidpoint) {
    EXPECT_EQ(pm({{1, 2}, {3, 4}}), (std::vector<double>{2, 3}));
}

TEST(PointwiseMedian, SingleCurveIsIdentity) {
    EXPECT_EQ(pm({{7, 8, 9}}), (std::vector<double>{7, 8, 9}));
}

TEST(PointwiseMedian, EmptyInputRejected) {
    EXPECT_THROW((void)pm({}), ArgumentError);
    EXPECT_THROW((void)median({}), ArgumentError);
}

TEST(MedianPolish, HandExample) {
    const auto d = median_polish(oracle::panel_from({{1, 2, 3}, {5, 6, 7}}));
    EXPECT_DOUBLE_EQ(d.grand_effect(0), 4.0);
    EXPECT_DOUBLE_EQ(d.row_effects(0, 0), -2.0);
    EXPECT_DOUBLE_EQ(d.row_effects(1, 0), 2.0);
    for (std::size_t s = 0; s < 2; ++s) {
        EXPECT_DOUBLE_EQ(d.residuals(s, 0, 0), -1.0);
        EXPECT_DOUBLE_EQ(d.residuals(s, 1, 0), 0.0);
        EXPECT_DOUBLE_EQ(d.residuals(s, 2, 0), 1.0);
    }
    EXPECT_TRUE(d.converged);
    EXPECT_EQ(d.iterations_used, 2u);
    EXPECT_EQ(d.method, DecompositionMethod::median_polish);
}

TEST(MedianPolish, AdditivePanelHasZeroResiduals) {
    const auto d = median_polish(oracle::panel_from({{3, 3, 3, 3}, {-1, -1, -1, -1}, {8, 8, 8, 8}}));
    for (double r : d.residuals.values()) EXPECT_EQ(r, 0.0);
    EXPECT_TRUE(d.converged);
    // The confirming sweep that finds all row medians at zero is counted.
    EXPECT_LE(d.iterations_used, 2u);
}

TEST(MedianPolish, MatchesScalarOracleOnSingleAgePanels) {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> z(0.0, 3.0);
    for (int rep = 0; rep < 25; ++rep) {
        oracle::Matrix m(5, std::vector<double>(5));
        for (auto& row : m) {
            for (double& v : row) v = z(rng);
        }
        const auto d = median_polish(oracle::panel_from(m));
        const auto o = oracle::scalar_median_polish(m);
        EXPECT_NEAR(d.grand_effect(0), o.grand, 1e-12);
        for (std::size_t s = 0; s < 5; ++s) {
            EXPECT_NEAR(d.row_effects(static_cast<Eigen::Index>(s), 0), o.rows[s], 1e-12);
            for (std::size_t t = 0; t < 5; ++t) EXPECT_NEAR(d.residuals(s, t, 0), o.residuals[s][t], 1e-12);
        }
    }
}

TEST(MedianPolish, ConvergedRowMediansWithinTolerance) {
    std::mt19937_64 rng(4);
    const auto panel = oracle::random_panel(6, 9, 7, rng);
    const auto d = median_polish(panel);
    ASSERT_TRUE(d.converged);
    for (std::size_t s = 0; s < 6; ++s) {
        for (std::size_t j = 0; j < 7; ++j) {
            std::vector<double> col;
            for (std::size_t t = 0; t < 9; ++t) col.push_back(d.residuals(s, t, j));
            EXPECT_LE(std::fabs(oracle::sorted_median(col)), d.tolerance);
        }
    }
}

TEST(MedianPolish, RobustToSingleYearOutlier) {
    std::mt19937_64 rng(12);
    CurveArray values = oracle::random_array(4, 7, 5, rng);
    // Year 3 of region 2 sits above its row median, so a further +100 shift leaves
    // every order statistic up to the median untouched.
    for (std::size_t j = 0; j < 5; ++j) values(2, 3, j) += 10.0;
    const FunctionalPanel panel({{"A", "B", "C", "D"}, consecutive_years(2000, 7), integer_age_grid(5)}, values,
                                Scale::log);
    for (std::size_t j = 0; j < 5; ++j) values(2, 3, j) += 100.0;
    const FunctionalPanel contaminated(panel.axes(), values, Scale::log);
    const auto a = median_polish(panel);
    const auto b = median_polish(contaminated);
    EXPECT_LT((a.grand_effect - b.grand_effect).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((a.row_effects - b.row_effects).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(MedianPolish, OutlierMovesRowMedianByAtMostOrderSpacing) {
    std::mt19937_64 rng(13);
    const CurveArray values = oracle::random_array(1, 7, 1, rng);
    std::vector<double> row(values.values().begin(), values.values().end());
    CurveArray shifted = values;
    shifted(0, 0, 0) += 100.0;
    const PanelAxes axes{{"A"}, consecutive_years(2000, 7), {0.0}};
    const auto a = median_polish(FunctionalPanel(axes, values, Scale::log));
    const auto b = median_polish(FunctionalPanel(axes, shifted, Scale::log));
    std::sort(row.begin(), row.end());
    const double spacing = std::max(row[3] - row[2], row[4] - row[3]);
    EXPECT_LE(std::fabs((a.grand_effect(0) + a.row_effects(0, 0)) - (b.grand_effect(0) + b.row_effects(0, 0))),
              spacing + 1e-12);
}

TEST(MedianPolish, InvalidArguments) {
    const auto p = oracle::panel_from({{1, 2}});
    EXPECT_THROW((void)median_polish(p, {0, 1e-8}), ArgumentError);
    EXPECT_THROW((void)median_polish(p, {10, -1.0}), ArgumentError);
}

TEST(MedianPolish, NonConvergenceStillExact) {
    std::mt19937_64 rng(9);
    const auto panel = oracle::random_panel(5, 6, 4, rng);
    const auto d = median_polish(panel, {1, 0.0});
    EXPECT_EQ(d.iterations_used, 1u);
    EXPECT_LT(max_abs_difference(reconstruct(d).values(), panel.values()), 1e-10);
}

TEST(MeanDecompose, HandExample) {
    const auto d = mean_decompose(oracle::panel_from({{1, 2, 3}, {5, 6, 7}}));
    EXPECT_NEAR(d.grand_effect(0), 4.0, 1e-15);
    EXPECT_NEAR(d.row_effects(0, 0), -2.0, 1e-15);
    EXPECT_NEAR(d.row_effects(1, 0), 2.0, 1e-15);
    EXPECT_NEAR(d.residuals(0, 0, 0), -1.0, 1e-15);
    EXPECT_NEAR(d.residuals(1, 2, 0), 1.0, 1e-15);
    EXPECT_EQ(d.method, DecompositionMethod::mean);
}

TEST(MeanDecompose, ConstantPanel) {
    const auto d = mean_decompose(oracle::panel_from({{2.5, 2.5}, {2.5, 2.5}}));
    EXPECT_DOUBLE_EQ(d.grand_effect(0), 2.5);
    EXPECT_DOUBLE_EQ(d.row_effects.cwiseAbs().maxCoeff(), 0.0);
    for (double r : d.residuals.values()) EXPECT_DOUBLE_EQ(r, 0.0);
}

TEST(MeanDecompose, CenteringAndExactness) {
    std::mt19937_64 rng(31);
    const auto panel = oracle::random_panel(7, 8, 6, rng);
    const auto d = mean_decompose(panel);
    EXPECT_LT(d.row_effects.colwise().mean().cwiseAbs().maxCoeff(), 1e-10);
    for (std::size_t s = 0; s < 7; ++s) {
        for (std::size_t j = 0; j < 6; ++j) {
            double m = 0.0;
            for (std::size_t t = 0; t < 8; ++t) m += d.residuals(s, t, j);
            EXPECT_LT(std::fabs(m / 8.0), 1e-10);
        }
    }
    EXPECT_LT(max_abs_difference(reconstruct(d).values(), panel.values()), 1e-12);
}

TEST(MeanDecompose, LocationShiftMovesGrandOnly) {
    std::mt19937_64 rng(32);
    const auto panel = oracle::random_panel(3, 4, 5, rng);
    CurveArray shifted = panel.values();
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t t = 0; t < 4; ++t) {
            for (std::size_t j = 0; j < 5; ++j) shifted(s, t, j) += 0.5 * static_cast<double>(j);
        }
    }
    const auto a = mean_decompose(panel);
    const auto b = mean_decompose(FunctionalPanel(panel.axes(), shifted, Scale::log));
    for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(b.grand_effect(j) - a.grand_effect(j), 0.5 * static_cast<double>(j), 1e-12);
    EXPECT_LT((a.row_effects - b.row_effects).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(max_abs_difference(a.residuals, b.residuals), 1e-12);
}

TEST(MeanDecompose, CommutesWithScaling) {
    std::mt19937_64 rng(33);
    const auto panel = oracle::random_panel(3, 4, 5, rng);
    CurveArray scaled = panel.values();
    for (double& v : scaled.values()) v *= 4.0;
    const auto a = mean_decompose(panel);
    const auto b = mean_decompose(FunctionalPanel(panel.axes(), scaled, Scale::log));
    EXPECT_LT((4.0 * a.grand_effect - b.grand_effect).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((4.0 * a.row_effects - b.row_effects).cwiseAbs().maxCoeff(), 1e-12);
    for (std::size_t i = 0; i < a.residuals.size(); ++i) {
        EXPECT_NEAR(4.0 * a.residuals.values()[i], b.residuals.values()[i], 1e-12);
    }
}

TEST(Reconstruct, ExactForBothMethods) {
    std::mt19937_64 rng(40);
    for (int rep = 0; rep < 10; ++rep) {
        const auto panel = oracle::random_panel(4, 6, 9, rng, 5.0);
        for (auto method : {DecompositionMethod::median_polish, DecompositionMethod::mean}) {
            EXPECT_LT(max_abs_difference(reconstruct(decompose(panel, method)).values(), panel.values()), 1e-10);
        }
    }
}

TEST(Reconstruct, ZeroDecompositionIsZeroPanel) {
    Decomposition d;
    d.axes = {{"A"}, {2000, 2001}, {0.0, 1.0}};
    d.grand_effect = Eigen::VectorXd::Zero(2);
    d.row_effects = Eigen::MatrixXd::Zero(1, 2);
    d.residuals = CurveArray(1, 2, 2);
    const auto panel = reconstruct(d);
    for (double v : panel.values().values()) EXPECT_EQ(v, 0.0);
}

TEST(Reconstruct, ShapeMismatchRejected) {
    const auto d0 = mean_decompose(oracle::panel_from({{1, 2}, {3, 4}}));
    Decomposition d = d0;
    d.row_effects = Eigen::MatrixXd::Zero(3, 1);
    EXPECT_THROW((void)reconstruct(d), ArgumentError);
}

TEST(DecompositionMethod, ParseRoundTrip) {
    for (auto m : {DecompositionMethod::median_polish, DecompositionMethod::mean}) {
        EXPECT_EQ(parse_decomposition_method(to_string(m)), m);
    }
    EXPECT_THROW((void)parse_decomposition_method("depth"), ArgumentError);
}
