#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "rscox/core/error.hpp"
#include "rscox/core/fields.hpp"
#include "rscox/core/grid.hpp"
#include "rscox/core/parallel.hpp"
#include "rscox/core/params.hpp"
#include "rscox/core/random.hpp"

using namespace rscox;

TEST(Grid, RectGridHasRowMajorIdsAndAreas)
{
    RectGridSpec spec{0.0, 4.0, 0.0, 2.0, 4, 2, 2.0, 10};
    const auto grid = buildRectGrid(spec, 1995.0, 1.0, 3);
    ASSERT_EQ(grid.nCells(), 8u);
    EXPECT_EQ(grid.nTimes(), 4);
    EXPECT_DOUBLE_EQ(grid.time(3), 1998.0);
    EXPECT_EQ(grid.cell(5).id, 5);
    EXPECT_DOUBLE_EQ(grid.cell(5).x, 1.5);
    EXPECT_DOUBLE_EQ(grid.cell(5).y, 1.5);
    EXPECT_DOUBLE_EQ(grid.cell(0).area, 4.0);
    EXPECT_DOUBLE_EQ(grid.totalArea(), 32.0);
    EXPECT_DOUBLE_EQ(grid.exposure(0), 4.0);
    EXPECT_EQ(grid.indexOf(7), 7);
    EXPECT_EQ(grid.indexOf(99), -1);
}

TEST(Grid, MaskDropsOutsideCellsAndScalesPartialOnes)
{
    RectGridSpec spec{0.0, 2.0, 0.0, 1.0, 2, 1, 1.0, 10};
    Polygon mask{{{0.0, 0.0}, {1.5, 0.0}, {1.5, 1.0}, {0.0, 1.0}}};
    const auto grid = buildRectGrid(spec, 0.0, 1.0, 1, &mask);
    ASSERT_EQ(grid.nCells(), 2u);
    EXPECT_NEAR(grid.cell(0).area, 1.0, 1e-12);
    EXPECT_NEAR(grid.cell(1).area, 0.5, 1e-12);

    Polygon left{{{0.0, 0.0}, {0.9, 0.0}, {0.9, 1.0}, {0.0, 1.0}}};
    const auto one = buildRectGrid(spec, 0.0, 1.0, 1, &left);
    ASSERT_EQ(one.nCells(), 1u);
    EXPECT_EQ(one.cell(0).id, 0);
}

TEST(Grid, RejectsBadInputs)
{
    EXPECT_THROW(SpaceTimeGrid({Cell{0, 0, 0, 0.0}}, 0.0, 1.0, 1), InputError);
    EXPECT_THROW(SpaceTimeGrid({Cell{0, 0, 0, 1.0}}, 0.0, 0.0, 1), InputError);
    EXPECT_THROW(SpaceTimeGrid({Cell{0, 0, 0, 1.0}}, 0.0, 1.0, 0), InputError);
    EXPECT_THROW(SpaceTimeGrid({Cell{0, 0, 0, 1.0}, Cell{0, 1, 1, 1.0}}, 0.0, 1.0, 1), InputError);
}

TEST(Fields, ShapeValidationNamesTheField)
{
    const auto grid = buildGrid({Cell{0, 0, 0, 1.0}}, 0.0, 1.0, 2);
    CovariateField v{FieldMatrix::Zero(1, 2)};
    try {
        validate(v, grid);
        FAIL() << "expected InputError";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("covariate"), std::string::npos) << e.what();
    }
    EXPECT_THROW(PressureModel(TabulatedMean{FieldMatrix::Zero(1, 3)}, -1.0), InputError);
}

TEST(Fields, TrendMeanEvaluatesDesign)
{
    const auto grid = buildGrid({Cell{0, 2.0, 3.0, 1.0}}, 10.0, 1.0, 2);
    DesignFunction design = [](double x, double y, double t) {
        Eigen::VectorXd f(3);
        f << 1.0, x * y, t;
        return f;
    };
    Eigen::VectorXd beta(3);
    beta << 100.0, 1.0, -2.0;
    const PressureModel pm(TrendMean{design, beta}, 1.0);
    const auto m = evalMean(pm, grid);
    EXPECT_DOUBLE_EQ(m(0, 0), 100.0 + 6.0 - 20.0);
    EXPECT_DOUBLE_EQ(m(0, 2), 100.0 + 6.0 - 24.0);
}

TEST(Params, ReducedModeAndRoundTrip)
{
    ModelParams p{-5.3, 9.7, 0.0097};
    EXPECT_TRUE(p.reduced());
    EXPECT_EQ(p.vector().size(), 3);
    EXPECT_EQ(p.expRatio(), 0.0);
    EXPECT_EQ(formatLogRatio(p.logRatio), "-inf");
    EXPECT_EQ(parseLogRatio("-inf"), -std::numeric_limits<double>::infinity());
    EXPECT_DOUBLE_EQ(parseLogRatio("-1.5"), -1.5);

    ModelParams q{1.0, 2.0, 0.5, std::log(0.25)};
    EXPECT_FALSE(q.reduced());
    EXPECT_DOUBLE_EQ(q.gamma0(), 2.0);
    const auto back = ModelParams::fromVector(q.vector());
    EXPECT_DOUBLE_EQ(back.logRatio, q.logRatio);
    EXPECT_THROW((ModelParams{0.0, 0.0, -1.0}.validate()), InputError);
}

TEST(Random, StreamsAreIndependentOfOrder)
{
    Rng a = makeStream(7, Stream::Noise, 3);
    Rng b = makeStream(7, Stream::Noise, 4);
    Rng a2 = makeStream(7, Stream::Noise, 3);
    const auto va = a();
    EXPECT_EQ(va, a2());
    EXPECT_NE(va, b());
    EXPECT_NE(deriveSeed(7, Stream::Noise, 3), deriveSeed(7, Stream::Counts, 3));
    EXPECT_NE(deriveSeed(7, Stream::Noise, 3), deriveSeed(8, Stream::Noise, 3));
}

TEST(Parallel, CoversEveryIndexOnceForAnyWorkerCount)
{
    for (int w : {1, 2, 3, 8}) {
        setWorkerCount(w);
        std::vector<int> hits(101, 0);
        parallelFor(hits.size(), [&](std::size_t i) { hits[i] += 1; });
        EXPECT_EQ(std::accumulate(hits.begin(), hits.end(), 0), 101);
        EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    }
    setWorkerCount(0);
}

TEST(Parallel, RethrowsLowestFailingIndex)
{
    setWorkerCount(4);
    try {
        parallelFor(40, [](std::size_t i) {
            if (i == 13 || i == 37) throw std::runtime_error("fail " + std::to_string(i));
        });
        FAIL() << "expected exception";
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "fail 13");
    }
    setWorkerCount(0);
}

TEST(Parallel, PairwiseSumIsExactForIntegers)
{
    std::vector<double> v(1000);
    std::iota(v.begin(), v.end(), 1.0);
    EXPECT_DOUBLE_EQ(pairwiseSum(v, 0.0), 500500.0);
    EXPECT_DOUBLE_EQ(pairwiseSum(std::vector<double>{}, 0.0), 0.0);
}
