#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rscox/rate.hpp"
#include "rscox/scenarios.hpp"

using namespace rscox;

namespace {
MomentSpec figureSpec(const scenarios::MomentFigure& f)
{
    return makeMomentSpec(f.mean, f.alpha, f.gamma0, f.sigma2, f.step);
}
}  // namespace

TEST(Rate, ZeroNoiseIsExactReciprocal)
{
    const std::vector<double> m{6.0, 5.5, 5.8, 5.0};
    const auto spec = makeMomentSpec(m, 0.3, 0.5, 0.0, 0.5);
    const auto g = gammaClosedForm(m, 0.3, 0.5, 0.5);
    for (int k = 0; k < 4; ++k) {
        const double gk = g.gamma[static_cast<std::size_t>(k)];
        EXPECT_NEAR(rateMeanApprox(spec, k), 1.0 / gk, 1e-13);
        EXPECT_NEAR(rateVarApprox(spec, k), 0.0, 1e-15);
        for (int l = 0; l < 4; ++l) {
            EXPECT_NEAR(rateCrossApprox(spec, k, l), 1.0 / (gk * g.gamma[static_cast<std::size_t>(l)]), 1e-12);
        }
    }
}

TEST(Rate, CrossDiagonalSimplifies)
{
    const auto spec = figureSpec(scenarios::figureOne());
    for (int k : {1, 7, 30}) {
        const double mu = stateMean(spec, k);
        const double v = stateCov(spec, k, k);
        EXPECT_NEAR(rateCrossApprox(spec, k, k), 1.0 / (mu * mu) + 3.0 * v / std::pow(mu, 4), 1e-12 / (mu * mu));
        const double m1 = rateMeanApprox(spec, k);
        EXPECT_NEAR(rateCrossApprox(spec, k, k), m1 * m1 + rateVarApprox(spec, k) - v * v / std::pow(mu, 6),
                    1e-10 / (mu * mu));
    }
}

TEST(Rate, NonPositiveMeanIsAnError)
{
    const auto spec = makeMomentSpec({1.0, 1.0}, 1.0, 0.0, 1.0, 1.0);
    EXPECT_THROW(rateMeanApprox(spec, 0), NumericError);
}

TEST(Rate, MeanCiHandArithmetic)
{
    const std::vector<double> s{1, 2, 3, 4, 5};
    const auto ci = meanCi(s, 0.95);
    const double half = 1.959963984540054 * std::sqrt(2.5 / 5.0);
    EXPECT_NEAR(ci.lo, 3.0 - half, 1e-12);
    EXPECT_NEAR(ci.hi, 3.0 + half, 1e-12);
}

TEST(Rate, ConstantSampleCollapsesMeanAndRejectsVariance)
{
    const std::vector<double> s(10, 4.2);
    const auto ci = meanCi(s, 0.95);
    EXPECT_DOUBLE_EQ(ci.lo, 4.2);
    EXPECT_DOUBLE_EQ(ci.hi, 4.2);
    EXPECT_THROW(varCi(s, 0.95), NumericError);
}

TEST(Rate, HeavyKurtosisOverflowIsReported)
{
    std::vector<double> s(20, 0.0);
    s[0] = 1000.0;
    try {
        varCi(s, 0.95);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("kurtosis"), std::string::npos);
    }
}

TEST(Rate, MedianConvention)
{
    EXPECT_DOUBLE_EQ(sampleMedian(std::vector<double>{3, 1, 2}), 2.0);
    EXPECT_DOUBLE_EQ(sampleMedian(std::vector<double>{4, 1, 3, 2}), 2.5);
}

TEST(Rate, IntervalsCoverNormalParameters)
{
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int reps = 1000;
    const int n = 10000;
    int meanHits = 0, varHits = 0;
    std::vector<double> s(n);
    for (int r = 0; r < reps; ++r) {
        for (auto& v : s) v = normal(rng);
        meanHits += meanCi(s, 0.95).contains(0.0) ? 1 : 0;
        varHits += varCi(s, 0.95).contains(1.0) ? 1 : 0;
    }
    EXPECT_GE(meanHits, 930);
    EXPECT_GE(varHits, 930);
}

TEST(Rate, MonteCarloIsSeedDeterministic)
{
    const auto spec = figureSpec(scenarios::figureOne());
    const auto a = mcRateMoments(spec, 300, 11);
    const auto b = mcRateMoments(spec, 300, 11);
    EXPECT_EQ(a.samples, b.samples);
    const auto c = mcRateMoments(spec, 300, 12);
    EXPECT_NE(a.samples, c.samples);
}

TEST(Rate, MonteCarloWithoutNoiseHasZeroVariance)
{
    const auto spec = makeMomentSpec(scenarios::risingMean(10), 0.01, 0.2, 0.0, 0.1);
    const auto mc = mcRateMoments(spec, 50, 3);
    EXPECT_NEAR(mc.var.maxCoeff(), 0.0, 1e-20);
}

TEST(Rate, RisingPressureLowersTheRate)
{
    const auto spec = figureSpec(scenarios::figureOne());
    const auto mc = mcRateMoments(spec, 500, 5);
    int violations = 0;
    for (int k = 2; k <= 50; ++k) {
        if (mc.mean(k) > mc.mean(k - 1) + 3.0 * mc.meanSe(k)) ++violations;
    }
    EXPECT_EQ(violations, 0);
    EXPECT_LT(mc.mean(50), mc.mean(1));
}

TEST(Rate, CrossMomentMatchesMonteCarlo)
{
    const auto spec = figureSpec(scenarios::figureOne());
    const auto mc = mcRateMoments(spec, 100000, 99);
    EXPECT_NEAR(rateCrossApprox(spec, 5, 10), mc.cross(5, 10), 3.0 * mc.crossSe(5, 10));
}

TEST(Rate, ApproximationImprovesAsNoiseShrinks)
{
    const auto base = scenarios::figureTwo();
    double previous = INFINITY;
    for (double s2 : {0.5, 0.1, 0.02}) {
        const auto spec = makeMomentSpec(base.mean, 0.3, base.gamma0, s2, base.step);
        const auto mc = mcRateMoments(spec, 100000, 17);
        double err = 0.0;
        for (int k = 1; k <= 50; ++k) err += std::abs(rateMeanApprox(spec, k) - mc.mean(k)) / mc.mean(k);
        EXPECT_LT(err, previous) << "sigma2=" << s2;
        previous = err;
    }
}
