#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "rscox/core/error.hpp"
#include "rscox/core/fields.hpp"
#include "rscox/core/grid.hpp"
#include "rscox/core/params.hpp"
#include "rscox/estimate/skeleton.hpp"
#include "rscox/sim.hpp"

namespace rscox {

/// Exponent of the overdispersion term lambda^2 (e^{q alpha^2 sigma^2} - 1).
/// Printed uses q = 4; Lognormal uses q = 2, the exact Var Lambda of the
/// reduced model for t > t0.
enum class VarianceCorrection { Printed, Lognormal };

struct ResidualField {
    FieldMatrix residual;  // column 0 unused (zero)
    FieldMatrix fitted;    // lambda(s,t; zetaHat) Delta Delta(s)
};

/// Pearson residuals for t > t0:
///   (n - lambda DD) / sqrt(lambdaHat DD + lambda^2 (e^{q alpha^2 sigma^2} - 1) DD^2),
/// with lambda the closed-form marginal intensity (lambdaHat when eta is finite)
/// and lambdaHat the Monte Carlo estimator on the given samples.
inline ResidualField pearsonResiduals(const CountsField& counts, const ModelParams& params, const SpaceTimeGrid& grid,
                                      const FieldMatrix& mean, const CovariateField& covariates, double sigma2,
                                      const PressureSamples& samples,
                                      VarianceCorrection correction = VarianceCorrection::Printed)
{
    validate(counts, grid);
    validate(covariates, grid);
    checkShape(grid, mean.rows(), mean.cols(), "mean pressure");
    require(samples.perCell.size() == grid.nCells(), "pearsonResiduals: sample set does not match grid");
    const double q = correction == VarianceCorrection::Printed ? 4.0 : 2.0;
    const double inflate = std::expm1(q * params.alpha * params.alpha * sigma2);
    const FieldMatrix closed = marginalIntensity(mean, covariates, params, sigma2);

    ResidualField out{FieldMatrix::Zero(mean.rows(), mean.cols()), FieldMatrix::Zero(mean.rows(), mean.cols())};
    std::vector<double> v(static_cast<std::size_t>(grid.nTimes()));
    for (std::size_t i = 0; i < grid.nCells(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        for (int k = 0; k < grid.nTimes(); ++k) v[static_cast<std::size_t>(k)] = covariates.values(row, k);
        const auto lh = lambdaHatCell(samples.perCell[i], v, params, grid.step());
        const double ex = grid.exposure(i);
        for (int k = 1; k < grid.nTimes(); ++k) {
            const double hat = lh.value[static_cast<std::size_t>(k)];
            const double lam = params.reduced() ? closed(row, k) : hat;
            const double variance = hat * ex + lam * lam * inflate * ex * ex;
            if (!(variance > 0.0) || !std::isfinite(variance)) {
                throw NumericError("pearsonResiduals: non-positive variance at cell " +
                                   std::to_string(grid.cell(i).id) + " k=" + std::to_string(k));
            }
            out.fitted(row, k) = lam * ex;
            out.residual(row, k) = (counts.values(row, k) - lam * ex) / std::sqrt(variance);
        }
    }
    return out;
}

struct ResidualBin {
    double avgFitted = 0.0;
    double avgResidual = 0.0;
    int count = 0;
    double twoSigma = 0.0;  // 2 / sqrt(count)
};

struct BinnedResiduals {
    std::vector<ResidualBin> bins;
    int nBins() const { return static_cast<int>(bins.size()); }
};

/// Equal-count bins by fitted value (sizes differ by at most one; ties keep
/// input order), each with its average residual and a +-2/sqrt(count) band.
inline BinnedResiduals binResiduals(const std::vector<double>& residuals, const std::vector<double>& fitted, int nBins)
{
    require(nBins >= 2, "binResiduals: need at least 2 bins");
    require(residuals.size() == fitted.size(), "binResiduals: residual and fitted sizes differ");
    const std::size_t n = residuals.size();
    require(n >= static_cast<std::size_t>(nBins), "binResiduals: fewer observations (" + std::to_string(n) +
                                                      ") than bins (" + std::to_string(nBins) + ")");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitted[a] < fitted[b]; });

    BinnedResiduals out;
    for (int b = 0; b < nBins; ++b) {
        const std::size_t begin = n * static_cast<std::size_t>(b) / static_cast<std::size_t>(nBins);
        const std::size_t end = n * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(nBins);
        ResidualBin bin;
        bin.count = static_cast<int>(end - begin);
        for (std::size_t j = begin; j < end; ++j) {
            bin.avgFitted += fitted[order[j]];
            bin.avgResidual += residuals[order[j]];
        }
        bin.avgFitted /= bin.count;
        bin.avgResidual /= bin.count;
        bin.twoSigma = 2.0 / std::sqrt(static_cast<double>(bin.count));
        out.bins.push_back(bin);
    }
    return out;
}

/// Flattens the k >= 1 entries of a residual field in (cell, k) order.
inline void flattenResiduals(const ResidualField& field, std::vector<double>& residuals, std::vector<double>& fitted)
{
    residuals.clear();
    fitted.clear();
    for (Eigen::Index i = 0; i < field.residual.rows(); ++i) {
        for (Eigen::Index k = 1; k < field.residual.cols(); ++k) {
            residuals.push_back(field.residual(i, k));
            fitted.push_back(field.fitted(i, k));
        }
    }
}

inline void writeBinsCsv(std::ostream& os, const BinnedResiduals& b)
{
    os << "bin,avgFitted,avgResidual,lo,hi,count\n";
    char buf[256];
    for (int i = 0; i < b.nBins(); ++i) {
        const auto& bin = b.bins[static_cast<std::size_t>(i)];
        std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g,%d\n", i + 1, bin.avgFitted, bin.avgResidual,
                      -bin.twoSigma, bin.twoSigma, bin.count);
        os << buf;
    }
}

}  // namespace rscox
