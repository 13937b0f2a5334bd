#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "vipar/stats.hpp"

using namespace vipar;
using namespace vipar::stats;

namespace {

struct Sample {
    Eigen::MatrixXd X; // without intercept
    std::vector<double> y;
};

Sample planted(std::size_t n, double b0, double b1, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> x(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Sample s{Eigen::MatrixXd(static_cast<Eigen::Index>(n), 1), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x(rng);
        s.X(static_cast<Eigen::Index>(i), 0) = xi;
        s.y[i] = u(rng) < 1.0 / (1.0 + std::exp(-(b0 + b1 * xi))) ? 1.0 : 0.0;
    }
    return s;
}

// Plain gradient ascent on the mean log-likelihood, written out by hand.
std::vector<double> gradient_ascent(const Sample& s, int iterations = 20000, double rate = 2.0) {
    const auto n = static_cast<std::size_t>(s.X.rows());
    double b0 = 0, b1 = 0;
    for (int it = 0; it < iterations; ++it) {
        double g0 = 0, g1 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = s.X(static_cast<Eigen::Index>(i), 0);
            const double r = s.y[i] - 1.0 / (1.0 + std::exp(-(b0 + b1 * xi)));
            g0 += r;
            g1 += r * xi;
        }
        b0 += rate * g0 / static_cast<double>(n);
        b1 += rate * g1 / static_cast<double>(n);
    }
    return {b0, b1};
}

} // namespace

TEST(OddsRatio, KnownRows) {
    EXPECT_NEAR(odds_ratio(1.374), 3.951, 0.001);
    EXPECT_NEAR(odds_ratio(0.779), 2.179, 0.001);
    EXPECT_EQ(odds_ratio(0.0), 1.0);
}

TEST(Gradient, MatchesCentralDifferences) {
    std::mt19937_64 rng(71);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::Index n = 50 + rep * 10, p = 2 + rep % 4;
        Eigen::MatrixXd X(n, p);
        Eigen::VectorXd y(n), beta(p);
        for (Eigen::Index i = 0; i < n; ++i) {
            X(i, 0) = 1.0;
            for (Eigen::Index j = 1; j < p; ++j) X(i, j) = z(rng);
            y[i] = z(rng) > 0 ? 1.0 : 0.0;
        }
        for (Eigen::Index j = 0; j < p; ++j) beta[j] = 0.5 * z(rng);
        const Penalty pen{rep % 2 ? 0.7 : 0.0, false};
        const auto g = gradient(X, y, beta, pen);
        for (Eigen::Index j = 0; j < p; ++j) {
            const double h = 1e-5;
            Eigen::VectorXd up = beta, dn = beta;
            up[j] += h;
            dn[j] -= h;
            const double fd = (log_likelihood(X, y, up, pen) - log_likelihood(X, y, dn, pen)) / (2 * h);
            EXPECT_LT(std::abs(fd - g[j]) / std::max(1.0, std::abs(g[j])), 1e-4);
        }
    }
}

TEST(LogitFit, RecoversPlantedCoefficient) {
    const auto s = planted(20000, -2.0, 0.8, 73);
    const auto fit = logit_fit(s.X, s.y, {"x"});
    EXPECT_TRUE(fit.converged);
    EXPECT_NEAR(fit.coefficients[1], 0.8, 0.1);
    EXPECT_NEAR(fit.coefficients[0], -2.0, 0.1);
    const auto ga = gradient_ascent(s);
    EXPECT_NEAR(fit.coefficients[0], ga[0], 1e-4);
    EXPECT_NEAR(fit.coefficients[1], ga[1], 1e-4);
    EXPECT_EQ(fit.odds_ratios[1], std::exp(fit.coefficients[1]));
    EXPECT_EQ(fit.names, (std::vector<std::string>{"(intercept)", "x"}));
}

TEST(LogitFit, AffineRescalingOfPredictor) {
    const auto s = planted(3000, -1.0, 0.6, 79);
    const auto base = logit_fit(s.X, s.y, {"x"});
    for (auto [a, b] : {std::pair{2.5, 3.0}, std::pair{0.1, -4.0}}) {
        Eigen::MatrixXd X2 = (s.X.array() * a + b).matrix();
        const auto fit = logit_fit(X2, s.y, {"x"});
        EXPECT_NEAR(fit.coefficients[1], base.coefficients[1] / a, 1e-6);
        EXPECT_NEAR(fit.p_values[1], base.p_values[1], 1e-6);
    }
}

TEST(LogitFit, PValueMonotoneInAbsZ) {
    double prev = 1.0;
    for (double z = 0.0; z < 8.0; z += 0.05) {
        const double p = two_sided_p(z);
        EXPECT_LE(p, prev);
        EXPECT_EQ(p, two_sided_p(-z));
        prev = p;
    }
    EXPECT_NEAR(two_sided_p(1.959963985), 0.05, 1e-9);
}

TEST(LogitFit, SingleClassOutcome) {
    Eigen::MatrixXd X(4, 1);
    X << 1, 2, 3, 4;
    try {
        logit_fit(X, {0, 0, 0, 0}, {"x"});
        FAIL();
    } catch (const StatsError& e) {
        EXPECT_STREQ(e.what(), "no outcome variation");
    }
}

TEST(LogitFit, SeparationSuggestsRidge) {
    Eigen::MatrixXd X(8, 1);
    X << 1, 2, 3, 4, 5, 6, 7, 8;
    const std::vector<double> y = {0, 0, 0, 0, 1, 1, 1, 1};
    try {
        logit_fit(X, y, {"x"});
        FAIL();
    } catch (const StatsError& e) {
        EXPECT_NE(std::string(e.what()).find("ridge"), std::string::npos);
    }
    LogitOptions opt;
    opt.ridge = 1.0;
    const auto fit = logit_fit(X, y, {"x"}, opt);
    EXPECT_TRUE(fit.converged);
    EXPECT_GT(fit.coefficients[1], 0.0);
}

TEST(LogitFit, ReportColumns) {
    const auto s = planted(500, -1.0, 0.5, 83);
    std::ostringstream out;
    write_logit_report(out, logit_fit(s.X, s.y, {"x"}));
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "predictor,b,S.E.,p-value,Exp(B)");
}

TEST(Pearson, Identities) {
    const std::vector<double> x = {1, 2, 4, 8, 16}, neg = {-1, -2, -4, -8, -16};
    EXPECT_DOUBLE_EQ(pearson_r(x, x), 1.0);
    EXPECT_DOUBLE_EQ(pearson_r(x, neg), -1.0);
    EXPECT_THROW(pearson_r(x, std::vector<double>(5, 3.0)), StatsError);
    EXPECT_THROW(pearson_r(std::vector<double>{1}, std::vector<double>{1}), StatsError);
}

TEST(Pearson, MatchesTwoPassOracle) {
    std::mt19937_64 rng(89);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> x(1000), y(1000);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = z(rng) * 3 + 10;
            y[i] = 0.3 * x[i] + z(rng);
        }
        EXPECT_NEAR(pearson_r(x, y), oracle::two_pass_pearson(x, y), 1e-12);
    }
}

TEST(Spearman, AverageRanks) {
    EXPECT_EQ(average_ranks(std::vector<double>{10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
    EXPECT_DOUBLE_EQ(spearman_rho(std::vector<double>{1, 2, 3}, std::vector<double>{1, 8, 27}), 1.0);
}

TEST(Collinearity, Levels) {
    std::mt19937_64 rng(97);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd X(2000, 4);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double a = z(rng);
        X(i, 0) = a;
        X(i, 1) = a + 0.3 * z(rng); // r ~ 0.96
        X(i, 2) = a + 1.2 * z(rng); // r ~ 0.64
        X(i, 3) = 1.0;              // constant, skipped
    }
    const auto pairs = screen_collinearity(X, {"a", "b", "c", "k"});
    ASSERT_EQ(pairs.size(), 3u);
    EXPECT_EQ(pairs[0].level, CollinearityLevel::flag);
    EXPECT_EQ(pairs[1].level, CollinearityLevel::warn);
}
