#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rscox/core/error.hpp"
#include "rscox/core/parallel.hpp"
#include "rscox/core/random.hpp"
#include "rscox/estimate/newton.hpp"
#include "rscox/rate.hpp"
#include "rscox/sim.hpp"

namespace rscox {

/// Linear-interpolation quantile of sorted data (the "type 7" rule).
inline double sortedQuantile(const std::vector<double>& sorted, double p)
{
    require(!sorted.empty(), "quantile of empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct BootstrapResult {
    std::vector<CiPair> cis;     // one per active parameter
    Eigen::MatrixXd estimates;   // successful replicates x parameters
    int failures = 0;
    int replicates = 0;
};

/// Parametric bootstrap: simulate nBoot catalogues at the fitted parameters,
/// refit each with fresh Monte Carlo samples and report percentile intervals.
/// Replicate b depends only on (seed, b). More than 20% failed refits aborts.
inline BootstrapResult bootstrapCi(const FitResult& fit, const SpaceTimeGrid& grid, const FieldMatrix& mean,
                                   const CovariateField& covariates, int nBoot, double level, std::uint64_t seed,
                                   NewtonOptions opts = {})
{
    require(fit.converged, "bootstrapCi: fit did not converge");
    require(nBoot >= 2, "bootstrapCi: need at least 2 replicates");
    require(level > 0.0 && level < 1.0, "bootstrapCi: level must be in (0,1)");
    opts.reducedMode = fit.zetaHat.reduced();
    const int p = opts.reducedMode ? 3 : 4;
    const PressureModel pm(TabulatedMean{mean}, fit.sigma2);

    std::vector<std::optional<Eigen::VectorXd>> est(static_cast<std::size_t>(nBoot));
    parallelFor(static_cast<std::size_t>(nBoot), [&](std::size_t b) {
        const std::uint64_t simSeed = deriveSeed(seed, Stream::Bootstrap, 2 * b);
        const auto sim = simulateCatalogue(pm, covariates, fit.zetaHat, grid, simSeed);
        const FitInputs in{grid, sim.counts, covariates, mean, fit.sigma2};
        NewtonOptions o = opts;
        o.mcSeed = deriveSeed(seed, Stream::Bootstrap, 2 * b + 1);
        try {
            const auto refit = newtonSolve(in, fit.zetaHat, o);
            if (refit.converged && refit.zetaHat.reduced() == fit.zetaHat.reduced()) {
                est[b] = refit.zetaHat.vector();
            }
        } catch (const std::exception&) {
            // counted as a failed replicate
        }
    });

    BootstrapResult out;
    out.replicates = nBoot;
    std::vector<Eigen::VectorXd> ok;
    for (const auto& e : est) {
        if (e) ok.push_back(*e);
        else ++out.failures;
    }
    if (out.failures > nBoot / 5) {
        throw NumericError("bootstrapCi: " + std::to_string(out.failures) + " of " + std::to_string(nBoot) +
                           " refits failed");
    }
    out.estimates.resize(static_cast<Eigen::Index>(ok.size()), p);
    for (std::size_t r = 0; r < ok.size(); ++r) out.estimates.row(static_cast<Eigen::Index>(r)) = ok[r].transpose();
    const double tail = (1.0 - level) / 2.0;
    for (int c = 0; c < p; ++c) {
        std::vector<double> col(ok.size());
        for (std::size_t r = 0; r < ok.size(); ++r) col[r] = ok[r](c);
        std::sort(col.begin(), col.end());
        out.cis.push_back({sortedQuantile(col, tail), sortedQuantile(col, 1.0 - tail), level});
    }
    return out;
}

}  // namespace rscox
