#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rscox/core/error.hpp"
#include "rscox/core/fields.hpp"
#include "rscox/core/grid.hpp"
#include "rscox/core/parallel.hpp"
#include "rscox/core/params.hpp"
#include "rscox/core/random.hpp"
#include "rscox/state.hpp"

namespace rscox {

/// One simulated catalogue of the Cox rate-and-state process.
struct SimOutput {
    NoiseField noise;
    FieldMatrix pressure;  // X = m + E
    FieldMatrix lambda;    // events / (km^2 yr)
    CountsField counts;
    std::uint64_t seed = 0;
};

/// Gaussian noise field, one stream per cell.
inline NoiseField sampleNoise(const SpaceTimeGrid& grid, double sigma2, std::uint64_t seed)
{
    require(sigma2 >= 0.0, "sampleNoise: sigma2 must be >= 0");
    NoiseField e{FieldMatrix::Zero(static_cast<Eigen::Index>(grid.nCells()), grid.nTimes())};
    if (sigma2 == 0.0) return e;
    const double sd = std::sqrt(sigma2);
    parallelFor(grid.nCells(), [&](std::size_t i) {
        Rng rng = makeStream(seed, Stream::Noise, static_cast<std::uint64_t>(grid.cell(i).id));
        std::normal_distribution<double> normal(0.0, sd);
        for (int k = 0; k < grid.nTimes(); ++k) e.values(static_cast<Eigen::Index>(i), k) = normal(rng);
    });
    return e;
}

/// X = m + E with E i.i.d. Normal(0, sigma^2) per cell and epoch.
inline FieldMatrix samplePressure(const PressureModel& pm, const SpaceTimeGrid& grid, std::uint64_t seed)
{
    return evalMean(pm, grid) + sampleNoise(grid, pm.noiseVar, seed).values;
}

/// Driving intensity Lambda(s,t) = exp[theta1 + theta2 V] gamma0 / Gamma(s,t).
///
/// In the reduced model this is exp[theta1 + theta2 V + alpha (X(s,t0) - X(s,t))].
inline FieldMatrix drivingMeasure(const FieldMatrix& x, const CovariateField& v, const ModelParams& params,
                                  const SpaceTimeGrid& grid)
{
    params.validate();
    checkShape(grid, x.rows(), x.cols(), "pressure");
    validate(v, grid);
    FieldMatrix lambda(x.rows(), x.cols());
    const double gamma0 = params.gamma0();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (params.reduced()) {
            for (Eigen::Index k = 0; k < x.cols(); ++k) {
                lambda(i, k) = std::exp(params.theta1 + params.theta2 * v.values(i, k) +
                                        params.alpha * (x(i, 0) - x(i, k)));
            }
        } else {
            std::vector<double> row(static_cast<std::size_t>(x.cols()));
            for (Eigen::Index k = 0; k < x.cols(); ++k) row[static_cast<std::size_t>(k)] = x(i, k);
            const auto traj = gammaClosedForm(row, params.alpha, gamma0, grid.step());
            for (Eigen::Index k = 0; k < x.cols(); ++k) {
                lambda(i, k) = std::exp(params.theta1 + params.theta2 * v.values(i, k)) * gamma0 /
                               traj.gamma[static_cast<std::size_t>(k)];
            }
        }
    }
    if (!lambda.allFinite()) throw NumericError("drivingMeasure: non-finite intensity");
    return lambda;
}

/// Independent Poisson counts with mean Lambda * Delta(s) * Delta on the
/// intervals k >= 1; column 0 stays zero.
inline CountsField sampleCounts(const FieldMatrix& lambda, const SpaceTimeGrid& grid, std::uint64_t seed)
{
    checkShape(grid, lambda.rows(), lambda.cols(), "intensity");
    require((lambda.array() >= 0.0).all() && lambda.allFinite(), "sampleCounts: intensity must be finite and >= 0");
    CountsField n{CountMatrix::Zero(lambda.rows(), lambda.cols())};
    parallelFor(grid.nCells(), [&](std::size_t i) {
        Rng rng = makeStream(seed, Stream::Counts, static_cast<std::uint64_t>(grid.cell(i).id));
        const auto row = static_cast<Eigen::Index>(i);
        for (int k = 1; k < grid.nTimes(); ++k) {
            const double mean = lambda(row, k) * grid.exposure(i);
            if (mean > 0.0) {
                std::poisson_distribution<int> poisson(mean);
                n.values(row, k) = poisson(rng);
            }
        }
    });
    return n;
}

inline SimOutput simulateCatalogue(const PressureModel& pm, const CovariateField& v, const ModelParams& params,
                                   const SpaceTimeGrid& grid, std::uint64_t seed)
{
    SimOutput out;
    out.seed = seed;
    out.noise = sampleNoise(grid, pm.noiseVar, seed);
    out.pressure = evalMean(pm, grid) + out.noise.values;
    out.lambda = drivingMeasure(out.pressure, v, params, grid);
    out.counts = sampleCounts(out.lambda, grid, seed);
    return out;
}

/// Marginal intensity of the reduced model,
/// lambda(s,t;zeta) = exp[theta1 + theta2 V + alpha (m(s,t0) - m(s,t)) + alpha^2 sigma^2] for t > t0.
/// At t0 the intensity is deterministic, exp[theta1 + theta2 V].
inline FieldMatrix marginalIntensity(const FieldMatrix& mean, const CovariateField& v, const ModelParams& params,
                                     double sigma2)
{
    FieldMatrix out(mean.rows(), mean.cols());
    const double boost = params.alpha * params.alpha * sigma2;
    for (Eigen::Index i = 0; i < mean.rows(); ++i) {
        for (Eigen::Index k = 0; k < mean.cols(); ++k) {
            out(i, k) = std::exp(params.theta1 + params.theta2 * v.values(i, k) +
                                 params.alpha * (mean(i, 0) - mean(i, k)) + (k > 0 ? boost : 0.0));
        }
    }
    return out;
}

/// Synthetic field used for demos and recovery experiments: a square grid
/// with a spatially varying pressure decline and a production bump.
struct Scenario {
    SpaceTimeGrid grid;
    FieldMatrix meanPressure;  // tabulated over nSteps + 1 (+ extra) epochs
    CovariateField covariates;
    FieldMatrix nextCovariate; // production for the year after the last epoch, one column
    double sigma2 = 0.0;
    ModelParams params;

    PressureModel pressureModel() const { return PressureModel(TabulatedMean{meanPressure}, sigma2); }
    FieldMatrix mean() const { return meanPressure.leftCols(grid.nTimes()); }
};

struct ScenarioSpec {
    int nx = 8;
    int ny = 8;
    int nSteps = 27;
    double tOrigin = 1995.0;
    double sigma2 = 7.17 * 7.17;
    ModelParams params{-5.3, 9.7, 0.0097};
    /// Expected total count over all cells and intervals; cell areas are scaled to hit it.
    double expectedTotal = 332.0;
    /// Extra tabulated epochs beyond nSteps (for forecasting).
    int extraSteps = 1;
};

/// Groningen-like synthetic setting: pressure falls from ~180 bara at a rate
/// that is highest in the south, annual production peaks mid-period, and the
/// cell area is chosen so the expected total count equals spec.expectedTotal.
inline Scenario makeScenario(const ScenarioSpec& spec)
{
    require(spec.nx >= 1 && spec.ny >= 1 && spec.nSteps >= 1, "scenario: invalid dimensions");
    const int nCols = spec.nSteps + 1 + spec.extraSteps;
    const int nCells = spec.nx * spec.ny;
    FieldMatrix mean(nCells, nCols);
    FieldMatrix prod(nCells, nCols);
    for (int iy = 0; iy < spec.ny; ++iy) {
        for (int ix = 0; ix < spec.nx; ++ix) {
            const int i = iy * spec.nx + ix;
            const double u = (ix + 0.5) / spec.nx;
            const double w = (iy + 0.5) / spec.ny;
            const double start = 180.0 - 10.0 * w;
            const double rate = 2.0 + 2.5 * (1.0 - w) + 0.5 * std::sin(3.0 * u);
            const double share = std::exp(-((u - 0.55) * (u - 0.55) + (w - 0.35) * (w - 0.35)) / 0.08);
            for (int k = 0; k < nCols; ++k) {
                const double t = static_cast<double>(k);
                mean(i, k) = start - rate * t - 0.03 * t * t * (1.0 - w);
                const double level = 0.12 * std::exp(-(t - 16.0) * (t - 16.0) / 90.0) + 0.01;
                prod(i, k) = level * share;
            }
        }
    }
    CovariateField cov{prod.leftCols(spec.nSteps + 1)};
    const ModelParams& p = spec.params;
    double perUnitArea = 0.0;
    const double boost = p.alpha * p.alpha * spec.sigma2;
    for (int i = 0; i < nCells; ++i) {
        for (int k = 1; k <= spec.nSteps; ++k) {
            perUnitArea += std::exp(p.theta1 + p.theta2 * cov.values(i, k) + p.alpha * (mean(i, 0) - mean(i, k)) + boost);
        }
    }
    const double area = spec.expectedTotal / perUnitArea;
    std::vector<Cell> cells;
    for (int iy = 0; iy < spec.ny; ++iy) {
        for (int ix = 0; ix < spec.nx; ++ix) {
            cells.push_back(Cell{iy * spec.nx + ix, (ix + 0.5) * std::sqrt(area), (iy + 0.5) * std::sqrt(area), area});
        }
    }
    SpaceTimeGrid grid(std::move(cells), spec.tOrigin, 1.0, spec.nSteps);
    FieldMatrix next = spec.extraSteps > 0 ? FieldMatrix(prod.col(spec.nSteps + 1)) : FieldMatrix();
    return Scenario{std::move(grid), std::move(mean), std::move(cov), std::move(next), spec.sigma2, spec.params};
}

}  // namespace rscox
