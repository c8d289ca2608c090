#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hdconf/error.hpp"
#include "hdconf/factor_model.hpp"
#include "hdconf/synthetic.hpp"
#include "oracles.hpp"

using namespace hdconf;

namespace {

double normalization_error(const Eigen::MatrixXd& g) {
    const double t = static_cast<double>(g.rows());
    const Eigen::MatrixXd m = g.transpose() * g / t;
    return (m - Eigen::MatrixXd::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
}

// sum_s sum_t sum_j w_j (X - Lambda G)^2 with least-squares loadings for the given scores.
double weighted_rss(const CurveArray& x, const Eigen::MatrixXd& g, const std::vector<double>& w) {
    const auto loadings = estimate_loadings(x, g);
    double rss = 0.0;
    for (std::size_t s = 0; s < x.rows(); ++s) {
        for (std::size_t t = 0; t < x.times(); ++t) {
            const Eigen::VectorXd fit = loadings[s] * g.row(static_cast<Eigen::Index>(t)).transpose();
            for (std::size_t j = 0; j < x.ages(); ++j) {
                rss += w[j] * std::pow(x(s, t, j) - fit(static_cast<Eigen::Index>(j)), 2);
            }
        }
    }
    return rss;
}

CurveArray rank_q_residuals(std::size_t n, std::size_t t, std::size_t j, std::size_t q, std::uint64_t seed,
                            double loading_scale) {
    SyntheticSpec spec;
    spec.regions = n;
    spec.times = t;
    spec.ages = j;
    spec.factors = q;
    spec.noise_sd = 0.0;
    spec.grand_effect = false;
    spec.row_effect_sd = 0.0;
    spec.loading_scale = loading_scale;
    const auto s = synthesize_panel(spec, seed);
    return s.panel.values();
}

}  // namespace

TEST(Quadrature, TrapezoidWeights) {
    const std::vector<double> grid{0, 1, 2, 3};
    EXPECT_EQ(trapezoid_weights(grid), (std::vector<double>{0.5, 1, 1, 0.5}));
    const std::vector<double> one{5.0};
    EXPECT_EQ(trapezoid_weights(one), (std::vector<double>{1.0}));
}

TEST(GramMatrix, HandExample) {
    CurveArray x(1, 2, 1, 1.0);
    const std::vector<double> w{1.0};
    const auto g = gram_matrix(x, w);
    EXPECT_EQ(g.delta, Eigen::MatrixXd::Ones(2, 2));
}

TEST(GramMatrix, ZeroResiduals) {
    const CurveArray x(3, 4, 5);
    const auto w = trapezoid_weights(integer_age_grid(5));
    EXPECT_EQ(gram_matrix(x, w).delta.cwiseAbs().maxCoeff(), 0.0);
}

TEST(GramMatrix, MatchesDirectSummationAndScalesQuadratically) {
    std::mt19937_64 rng(2);
    CurveArray x = oracle::random_array(5, 6, 7, rng);
    const auto w = trapezoid_weights(integer_age_grid(7));
    const auto g = gram_matrix(x, w);
    EXPECT_LT((g.delta - oracle::gram(x, w)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((g.delta - g.delta.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    const auto ev = symmetric_eigen(g.delta).values;
    EXPECT_GE(ev.minCoeff(), -1e-10 * ev.maxCoeff());
    for (double& v : x.values()) v *= 3.0;
    EXPECT_LT((gram_matrix(x, w).delta - 9.0 * g.delta).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GramMatrix, QuadratureSizeMismatch) {
    const CurveArray x(1, 2, 3);
    const std::vector<double> w{1.0, 1.0};
    EXPECT_THROW((void)gram_matrix(x, w), ArgumentError);
}

TEST(Scores, TwoByTwoExample) {
    GramMatrix g{Eigen::MatrixXd::Ones(2, 2), {1.0}};
    const auto s = estimate_scores(g, 1);
    EXPECT_NEAR(s(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(s(1, 0), 1.0, 1e-12);
}

TEST(Scores, IdentityGivesNormalizedBasis) {
    GramMatrix g{Eigen::MatrixXd::Identity(5, 5), {1.0}};
    EXPECT_LT(normalization_error(estimate_scores(g, 5)), 1e-10);
}

TEST(Scores, RepeatedEigenvaluesStayOrthogonal) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(6, 6);
    d.diagonal() << 3, 3, 3, 1, 1, 0.5;
    std::mt19937_64 rng(6);
    std::normal_distribution<double> z;
    Eigen::MatrixXd r(6, 6);
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = z(rng);
    const Eigen::MatrixXd qm = Eigen::HouseholderQR<Eigen::MatrixXd>(r).householderQ();
    GramMatrix g{qm * d * qm.transpose(), {1.0}};
    EXPECT_LT(normalization_error(estimate_scores(g, 5)), 1e-8);
}

TEST(Scores, SignRuleLargestEntryPositive) {
    Eigen::MatrixXd m(3, 2);
    m << 0.1, 0.5, -0.9, -0.5, 0.2, 0.3;
    fix_column_signs(m);
    EXPECT_GT(m(1, 0), 0.0);
    EXPECT_DOUBLE_EQ(m(0, 1), 0.5);  // tie between rows 0 and 1 goes to the earliest
}

TEST(Scores, QOutOfRange) {
    GramMatrix g{Eigen::MatrixXd::Identity(3, 3), {1.0}};
    EXPECT_THROW((void)estimate_scores(g, 0), ArgumentError);
    EXPECT_THROW((void)estimate_scores(g, 4), ArgumentError);
}

TEST(Loadings, HandExampleReconstructs) {
    CurveArray x(1, 2, 1, 1.0);
    Eigen::MatrixXd scores(2, 1);
    scores << 1, 1;
    const auto l = estimate_loadings(x, scores);
    EXPECT_DOUBLE_EQ(l[0](0, 0), 1.0);
    EXPECT_DOUBLE_EQ((l[0] * scores.row(0).transpose())(0), 1.0);
}

TEST(Loadings, ZeroResidualsGiveZeroLoadings) {
    const CurveArray x(2, 3, 4);
    const Eigen::MatrixXd scores = Eigen::MatrixXd::Ones(3, 1);
    for (const auto& l : estimate_loadings(x, scores)) EXPECT_EQ(l.cwiseAbs().maxCoeff(), 0.0);
}

TEST(SelectFactors, HandExamples) {
    const std::vector<double> nu{1.0, 0.1, 0.01, 0.001};
    const auto c = select_num_factors(nu, 0.2, 4);
    EXPECT_EQ(c.argmin, 2u);
    EXPECT_EQ(c.q, 1u);
    ASSERT_EQ(c.objective.size(), 4u);
    EXPECT_NEAR(c.objective[0], 1.2, 1e-12);
    EXPECT_NEAR(c.objective[1], 0.5, 1e-12);
    EXPECT_NEAR(c.objective[2], 0.61, 1e-12);
    EXPECT_NEAR(c.objective[3], 0.801, 1e-12);

    const std::vector<double> nu3{1.0, 0.9, 0.88, 0.0001, 0.00005};
    const auto c3 = select_num_factors(nu3, default_factor_penalty(40, 30), 5);
    EXPECT_EQ(c3.argmin, 4u);
    EXPECT_EQ(c3.q, 3u);
}

TEST(SelectFactors, FlatSpectrumClampsToOne) {
    const std::vector<double> nu(6, 0.3);
    const auto c = select_num_factors(nu, 0.01, 6);
    EXPECT_EQ(c.argmin, 1u);
    EXPECT_EQ(c.raw, 0);
    EXPECT_EQ(c.q, 1u);
}

TEST(SelectFactors, EmptySpectrumRejected) {
    EXPECT_THROW((void)select_num_factors(std::vector<double>{}, 0.1, 1), ArgumentError);
}

TEST(SelectFactors, DefaultPenalty) {
    EXPECT_NEAR(default_factor_penalty(40, 30), 1.0 / std::sqrt(40.0), 1e-15);
    EXPECT_NEAR(default_factor_penalty(10, 60), 1.0 / std::sqrt(60.0), 1e-15);
}

TEST(FitFactorModel, NoiselessRankThree) {
    const CurveArray x = rank_q_residuals(40, 30, 21, 3, 5, 1.0);
    const auto w = trapezoid_weights(integer_age_grid(21));
    const auto fm = fit_factor_model(x, w);
    EXPECT_EQ(fm.q, 3u);
    EXPECT_LT(normalization_error(fm.scores), 1e-8);
    EXPECT_LT(max_abs_difference(fm.fitted(), x), 1e-6);
    EXPECT_EQ(fm.q_max, 30u);
    EXPECT_NEAR(fm.penalty, default_factor_penalty(40, 30), 1e-15);
    for (Eigen::Index i = 1; i < fm.eigenvalues.size(); ++i) EXPECT_LE(fm.eigenvalues(i), fm.eigenvalues(i - 1));
}

TEST(FitFactorModel, OverrideOne) {
    std::mt19937_64 rng(3);
    const CurveArray x = oracle::random_array(6, 8, 5, rng);
    FactorModelOptions opt;
    opt.q_override = 1;
    const auto fm = fit_factor_model(x, trapezoid_weights(integer_age_grid(5)), opt);
    EXPECT_EQ(fm.q, 1u);
    EXPECT_EQ(fm.scores.cols(), 1);
    EXPECT_LT(normalization_error(fm.scores), 1e-8);
}

TEST(FitFactorModel, WhiteNoiseSelectsOneFactor) {
    const auto w = trapezoid_weights(integer_age_grid(21));
    int ones = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        const CurveArray x = oracle::random_array(30, 30, 21, rng);
        const auto fm = fit_factor_model(x, w);
        ones += fm.q == 1 ? 1 : 0;
        // The rank-one fit leaves exactly the spectrum beyond the first eigenvalue.
        const double total = fm.eigenvalues.sum();
        const double rel = weighted_rss(x, fm.scores.leftCols(1), w) / (30.0 * 30.0 * total);
        EXPECT_NEAR(rel, 1.0 - fm.eigenvalues(0) / total, 1e-8);
    }
    EXPECT_EQ(ones, 100);
}

TEST(FitFactorModel, ReconstructionIsOptimalAmongNormalizedScores) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 5; ++rep) {
        const CurveArray x = oracle::random_array(3, 6, 4, rng);
        const auto w = trapezoid_weights(integer_age_grid(4));
        FactorModelOptions opt;
        opt.q_override = 2;
        const auto fm = fit_factor_model(x, w, opt);
        const double best = weighted_rss(x, fm.scores, w);
        for (int restart = 0; restart < 200; ++restart) {
            Eigen::MatrixXd r(6, 2);
            for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = z(rng);
            const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(r).householderQ() * Eigen::MatrixXd::Identity(6, 2);
            EXPECT_LE(best, weighted_rss(x, std::sqrt(6.0) * q, w) + 1e-10);
        }
    }
}

TEST(FitFactorModel, RegionPermutationInvariance) {
    std::mt19937_64 rng(23);
    const CurveArray x = oracle::random_array(4, 7, 5, rng);
    CurveArray y(4, 7, 5);
    const std::size_t perm[] = {2, 0, 3, 1};
    for (std::size_t s = 0; s < 4; ++s) {
        for (std::size_t t = 0; t < 7; ++t) {
            for (std::size_t j = 0; j < 5; ++j) y(s, t, j) = x(perm[s], t, j);
        }
    }
    const auto w = trapezoid_weights(integer_age_grid(5));
    FactorModelOptions opt;
    opt.q_override = 2;
    const auto a = fit_factor_model(x, w, opt);
    const auto b = fit_factor_model(y, w, opt);
    EXPECT_LT((a.scores - b.scores).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff(), 1e-12);
    for (std::size_t s = 0; s < 4; ++s) EXPECT_LT((b.loadings[s] - a.loadings[perm[s]]).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FitFactorModel, DeterministicSigns) {
    std::mt19937_64 rng(29);
    const CurveArray x = oracle::random_array(5, 9, 6, rng);
    const auto w = trapezoid_weights(integer_age_grid(6));
    const auto a = fit_factor_model(x, w);
    const auto b = fit_factor_model(x, w);
    EXPECT_EQ(a.scores, b.scores);
}

TEST(FitFactorModel, NeedsTwoYears) {
    const CurveArray x(2, 1, 3);
    EXPECT_THROW((void)fit_factor_model(x, trapezoid_weights(integer_age_grid(3))), ArgumentError);
}
