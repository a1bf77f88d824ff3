#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "rscox/diagnose.hpp"

using namespace rscox;

TEST(Residuals, ZeroAtExpectedCounts)
{
    auto p = fixture::randomProblem(5, 6, 1);
    const ModelParams zeta{-1.0, 3.0, 0.02};
    const auto n = fixture::integerExpectations(p, zeta, p.covariates, 2);
    const auto samples = drawPressureSamples(p.grid, p.mean, 0.0, 1, 3);
    const auto r = pearsonResiduals(n, zeta, p.grid, p.mean, p.covariates, 0.0, samples);
    EXPECT_LT(r.residual.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Residuals, NoiseFreeCaseIsClassicalPearson)
{
    const auto p = fixture::randomProblem(4, 5, 4);
    const ModelParams zeta{0.5, 1.0, 0.02};
    const PressureModel pm(TabulatedMean{p.mean}, 0.0);
    const auto n = simulateCatalogue(pm, p.covariates, zeta, p.grid, 5).counts;
    const auto samples = drawPressureSamples(p.grid, p.mean, 0.0, 1, 6);
    const auto r = pearsonResiduals(n, zeta, p.grid, p.mean, p.covariates, 0.0, samples);
    for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index k = 1; k <= 5; ++k) {
            const double mu = r.fitted(i, k);
            EXPECT_NEAR(r.residual(i, k), (n.values(i, k) - mu) / std::sqrt(mu), 1e-12);
        }
    }
}

TEST(Residuals, CalibratedOnWellSpecifiedData)
{
    const auto sc = makeScenario({});
    const auto sim = simulateCatalogue(sc.pressureModel(), sc.covariates, sc.params, sc.grid, 7);
    const auto samples = drawPressureSamples(sc.grid, sc.mean(), sc.sigma2, 500, 8);
    const auto r = pearsonResiduals(sim.counts, sc.params, sc.grid, sc.mean(), sc.covariates, sc.sigma2, samples);
    std::vector<double> res, fit;
    flattenResiduals(r, res, fit);
    double m = 0.0, v = 0.0;
    for (double x : res) m += x;
    m /= static_cast<double>(res.size());
    for (double x : res) v += (x - m) * (x - m);
    v /= static_cast<double>(res.size() - 1);
    EXPECT_GE(v, 0.5);
    EXPECT_LE(v, 2.0);
}

TEST(Binning, EqualCountPartition)
{
    std::vector<double> res(103), fit(103);
    for (std::size_t i = 0; i < res.size(); ++i) {
        fit[i] = static_cast<double>((i * 37) % 103);
        res[i] = 0.0;
    }
    const auto b = binResiduals(res, fit, 10);
    int total = 0;
    for (const auto& bin : b.bins) {
        EXPECT_TRUE(bin.count == 10 || bin.count == 11);
        EXPECT_DOUBLE_EQ(bin.avgResidual, 0.0);
        EXPECT_DOUBLE_EQ(bin.twoSigma, 2.0 / std::sqrt(bin.count));
        total += bin.count;
    }
    EXPECT_EQ(total, 103);
    for (int i = 1; i < b.nBins(); ++i) EXPECT_LT(b.bins[static_cast<std::size_t>(i - 1)].avgFitted, b.bins[static_cast<std::size_t>(i)].avgFitted);
}

TEST(Binning, RejectsTooFewObservations)
{
    EXPECT_THROW(binResiduals({1.0}, {1.0}, 2), InputError);
    EXPECT_THROW(binResiduals({1.0, 2.0}, {1.0}, 2), InputError);
}

TEST(Binning, CsvHeader)
{
    std::ostringstream os;
    writeBinsCsv(os, binResiduals({0.0, 1.0, 2.0, 3.0}, {1.0, 2.0, 3.0, 4.0}, 2));
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "bin,avgFitted,avgResidual,lo,hi,count");
}
