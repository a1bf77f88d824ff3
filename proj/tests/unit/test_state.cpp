#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rscox/state.hpp"

using namespace rscox;

TEST(State, EulerStepMatchesDefinition)
{
    const double g = gammaEulerStep(0.2, 300.0, 299.0, 0.01, 0.1);
    EXPECT_NEAR(g, (0.2 + 0.001) * std::exp(-0.01), 1e-15);
}

TEST(State, ClosedFormMatchesIteratedEuler)
{
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 2 + static_cast<int>(u(rng) * 60);
        const double alpha = 1e-3 + 0.2 * u(rng);
        const double gamma0 = 5.0 * u(rng);
        const double step = 0.01 + u(rng);
        std::vector<double> x(static_cast<std::size_t>(n));
        for (auto& v : x) v = 300.0 * u(rng);
        const auto closed = gammaClosedForm(x, alpha, gamma0, step);
        double g = gamma0;
        for (int k = 1; k < n; ++k) {
            g = gammaEulerStep(g, x[static_cast<std::size_t>(k - 1)], x[static_cast<std::size_t>(k)], alpha, step);
            EXPECT_NEAR(closed.gamma[static_cast<std::size_t>(k)], g, 1e-12 * std::abs(g));
        }
    }
}

TEST(State, ClosedFormMatchesDirectSum)
{
    const std::vector<double> x{300.0, 280.0, 281.0, 250.0, 249.5};
    const auto closed = gammaClosedForm(x, 0.03, 0.7, 0.25);
    const auto direct = oracle::stateBySum(x, 0.03, 0.7, 0.25);
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(closed.gamma[k], direct[k], 1e-13 * direct[k]);
}

TEST(State, ZeroInitialStateIsAllowed)
{
    const std::vector<double> x{3.0, 2.0, 1.0};
    const auto g = gammaClosedForm(x, 1.0, 0.0, 1.0);
    EXPECT_EQ(g.gamma[0], 0.0);
    EXPECT_NEAR(g.gamma[1], std::exp(-1.0), 1e-15);
}

TEST(State, MomentsMatchTermExpansionOracle)
{
    struct Case {
        std::vector<double> m;
        double alpha, gamma0, sigma2, step;
    };
    const std::vector<Case> cases{
        {{3.0, 2.0, 1.0}, 1.0, 0.0, 0.5, 1.0},
        {{3.0, 2.0, 1.0}, 1.0, 0.3, 2.0, 1.0},
        {{10.0, 12.0, 11.0, 15.0, 14.0}, 0.2, 0.7, 1.3, 0.5},
        {{5.0, 5.0, 5.0, 5.0}, 0.4, 1.1, 0.8, 0.25},
    };
    for (const auto& c : cases) {
        const auto spec = makeMomentSpec(c.m, c.alpha, c.gamma0, c.sigma2, c.step);
        const auto ref = oracle::stateMoments(c.m, c.alpha, c.gamma0, c.sigma2, c.step);
        const int n = static_cast<int>(c.m.size());
        for (int k = 0; k < n; ++k) {
            EXPECT_NEAR(stateMean(spec, k), ref.mean(k), 1e-12 * std::abs(ref.mean(k)) + 1e-14);
            for (int l = 0; l < n; ++l) {
                const double scale = std::sqrt(std::abs(ref.cov(k, k) * ref.cov(l, l))) + std::abs(ref.mean(k) * ref.mean(l));
                EXPECT_NEAR(stateCov(spec, k, l), ref.cov(k, l), 1e-10 * scale) << "k=" << k << " l=" << l;
            }
        }
    }
}

TEST(State, ExampleTwoSignStructure)
{
    const std::vector<double> m{3.0, 2.0, 1.0};
    EXPECT_LT(stateCov(makeMomentSpec(m, 1.0, 0.0, 0.5, 1.0), 1, 2), 0.0);
    EXPECT_NEAR(stateCov(makeMomentSpec(m, 1.0, 0.0, 1.0, 1.0), 1, 2), 0.0, 1e-12);
    EXPECT_GT(stateCov(makeMomentSpec(m, 1.0, 0.0, 2.0, 1.0), 1, 2), 0.0);
}

TEST(State, ExampleTwoVarianceAtUnitNoise)
{
    // gamma0 = 0 leaves (alpha step)^2 c^2 (c^2 - 1) f_10^2 with c = e, f_10 = 1/e.
    const auto spec = makeMomentSpec({3.0, 2.0, 1.0}, 1.0, 0.0, 1.0, 1.0);
    const double e = std::exp(1.0);
    EXPECT_NEAR(stateCov(spec, 1, 1), e * e - 1.0, 1e-12);
}

TEST(State, CovarianceIsSymmetricAndZeroAtOrigin)
{
    const auto spec = makeMomentSpec({4.0, 3.5, 3.7, 2.0}, 0.5, 0.4, 1.5, 0.5);
    for (int k = 0; k < 4; ++k) {
        EXPECT_EQ(stateCov(spec, 0, k), 0.0);
        for (int l = 0; l < 4; ++l) EXPECT_DOUBLE_EQ(stateCov(spec, k, l), stateCov(spec, l, k));
    }
    EXPECT_DOUBLE_EQ(stateMean(spec, 0), 0.4);
}

TEST(State, ZeroNoiseGivesDeterministicMoments)
{
    const std::vector<double> m{10.0, 9.0, 8.5};
    const auto spec = makeMomentSpec(m, 0.1, 0.2, 0.0, 1.0);
    const auto g = gammaClosedForm(m, 0.1, 0.2, 1.0);
    for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(stateMean(spec, k), g.gamma[static_cast<std::size_t>(k)], 1e-14);
        EXPECT_NEAR(stateCov(spec, k, k), 0.0, 1e-14);
    }
}

TEST(State, SignClassification)
{
    EXPECT_EQ(covSignClassify(makeMomentSpec({1.0, 2.0, 3.0}, 1.0, 0.0, 0.5, 1.0)), CovSign::NonNegativeAll);
    EXPECT_EQ(covSignClassify(makeMomentSpec({3.0, 2.0, 1.0}, 1.0, 0.0, 0.5, 1.0)), CovSign::BoundedNegative);
    EXPECT_EQ(covSignClassify(makeMomentSpec({3.0, 2.0, 1.0}, 1.0, 0.0, 2.5, 1.0)), CovSign::NonNegativeAll);
    EXPECT_EQ(covSignClassify(makeMomentSpec({1.0, 3.0, 2.0}, 1.0, 0.0, 0.5, 1.0)), CovSign::Indeterminate);
    EXPECT_STREQ(toString(CovSign::BoundedNegative), "bounded-negative");
}

TEST(State, RejectsInvalidSpecs)
{
    EXPECT_THROW(makeMomentSpec({}, 1.0, 0.0, 1.0, 1.0), InputError);
    EXPECT_THROW(makeMomentSpec({1.0}, 0.0, 0.0, 1.0, 1.0), InputError);
    EXPECT_THROW(makeMomentSpec({1.0}, 1.0, -1.0, 1.0, 1.0), InputError);
    const auto spec = makeMomentSpec({1.0, 2.0}, 1.0, 0.0, 1.0, 1.0);
    EXPECT_THROW(stateMean(spec, 2), InputError);
}
