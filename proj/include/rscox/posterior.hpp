#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rscox/core/error.hpp"
#include "rscox/core/fields.hpp"
#include "rscox/core/grid.hpp"
#include "rscox/core/parallel.hpp"
#include "rscox/core/params.hpp"
#include "rscox/core/random.hpp"

namespace rscox {

// Posterior of the pressure noise e(s, t_0..t_m) given the counts of one cell,
// under the reduced (log-Gaussian) model.

/// Everything the per-cell posterior depends on.
struct PosteriorCell {
    std::vector<double> mean;       // m(s, t_k)
    std::vector<double> covariate;  // V(s, t_k)
    std::vector<int> counts;        // n(s, t_k); index 0 ignored
    double exposure = 1.0;          // Delta * Delta(s)
    ModelParams params;
    double sigma2 = 1.0;

    std::size_t size() const { return mean.size(); }

    /// log Lambda_e(t_j) = theta1 + theta2 V_j + alpha (m_0 + e_0 - m_j - e_j).
    double logIntensity(std::span<const double> e, std::size_t j) const
    {
        return params.theta1 + params.theta2 * covariate[j] + params.alpha * (mean[0] + e[0] - mean[j] - e[j]);
    }
};

inline PosteriorCell makePosteriorCell(const SpaceTimeGrid& grid, std::size_t i, const FieldMatrix& mean,
                                       const CountsField& counts, const CovariateField& covariates,
                                       const ModelParams& params, double sigma2)
{
    require(params.reduced(), "posterior: only the reduced model (eta = -inf) is supported");
    require(sigma2 > 0.0, "posterior: sigma2 must be positive");
    const auto row = static_cast<Eigen::Index>(i);
    PosteriorCell c;
    for (int k = 0; k < grid.nTimes(); ++k) {
        c.mean.push_back(mean(row, k));
        c.covariate.push_back(covariates.values(row, k));
        c.counts.push_back(k == 0 ? 0 : counts.values(row, k));
    }
    c.exposure = grid.exposure(i);
    c.params = params;
    c.sigma2 = sigma2;
    return c;
}

/// Log posterior up to an additive constant:
/// -sum_j e_j^2 / (2 sigma^2) + sum_{j>=1} [n_j log Lambda_e(t_j) - DD Lambda_e(t_j)].
inline double logPosteriorCell(const PosteriorCell& c, std::span<const double> e)
{
    require(e.size() == c.size(), "logPosteriorCell: noise vector has wrong length");
    double lp = 0.0;
    for (double v : e) lp -= v * v / (2.0 * c.sigma2);
    for (std::size_t j = 1; j < c.size(); ++j) {
        const double eta = c.logIntensity(e, j);
        lp += c.counts[j] * eta - c.exposure * std::exp(eta);
    }
    return lp;
}

/// Gradient of logPosteriorCell:
///   j > 0: -e_j / sigma^2 - alpha (n_j - Lambda_j DD)
///   j = 0: -e_0 / sigma^2 + alpha sum_{i>=1} (n_i - Lambda_i DD).
inline std::vector<double> gradLogPosteriorCell(const PosteriorCell& c, std::span<const double> e)
{
    require(e.size() == c.size(), "gradLogPosteriorCell: noise vector has wrong length");
    std::vector<double> g(c.size());
    double sum = 0.0;
    for (std::size_t j = 1; j < c.size(); ++j) {
        const double r = c.counts[j] - std::exp(c.logIntensity(e, j)) * c.exposure;
        g[j] = -e[j] / c.sigma2 - c.params.alpha * r;
        sum += r;
    }
    g[0] = -e[0] / c.sigma2 + c.params.alpha * sum;
    return g;
}

/// Langevin proposal mean mu(e) = e + (eps/2) grad log f(e).
inline std::vector<double> proposalMean(const PosteriorCell& c, std::span<const double> e, double stepSize)
{
    auto g = gradLogPosteriorCell(c, e);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = e[j] + 0.5 * stepSize * g[j];
    return g;
}

struct MalaConfig {
    double stepSize = 1.0;  // proposal variance eps
    int burnIn = 10000;
    int thin = 1000;
    int nSamples = 5000;
    std::uint64_t seed = 1;
    /// Keep every retained noise vector; otherwise only e_0 draws and summaries.
    bool keepFullSamples = true;

    void validate() const
    {
        require(stepSize > 0.0 && std::isfinite(stepSize), "MALA: step size must be positive");
        require(burnIn >= 0, "MALA: burn-in must be >= 0");
        require(thin >= 1, "MALA: thinning must be >= 1");
        require(nSamples >= 1, "MALA: sample count must be >= 1");
    }
};

/// Step size 0.02 * sigma, the default proposal variance.
inline double defaultStepSize(double sigma2) { return 0.02 * std::sqrt(sigma2); }

/// Current chain position with cached log density and proposal mean.
struct ChainState {
    std::vector<double> e;
    double logDensity = 0.0;
    std::vector<double> drift;  // mu(e)
};

/// Log density and drift in one pass over the epochs.
inline ChainState makeChainState(const PosteriorCell& c, std::vector<double> e, double stepSize)
{
    require(e.size() == c.size(), "MALA: noise vector has wrong length");
    ChainState s;
    s.drift.resize(e.size());
    double lp = 0.0;
    double sum = 0.0;
    for (double v : e) lp -= v * v / (2.0 * c.sigma2);
    for (std::size_t j = 1; j < e.size(); ++j) {
        const double eta = c.logIntensity(e, j);
        const double lambdaDd = std::exp(eta) * c.exposure;
        lp += c.counts[j] * eta - lambdaDd;
        const double r = c.counts[j] - lambdaDd;
        s.drift[j] = e[j] + 0.5 * stepSize * (-e[j] / c.sigma2 - c.params.alpha * r);
        sum += r;
    }
    s.drift[0] = e[0] + 0.5 * stepSize * (-e[0] / c.sigma2 + c.params.alpha * sum);
    s.logDensity = lp;
    s.e = std::move(e);
    return s;
}

/// log of f(e')q(e|e') / (f(e)q(e'|e)) for a proposed move from `from` to `to`.
inline double malaLogAcceptance(const ChainState& from, const ChainState& to, double stepSize)
{
    double forward = 0.0;
    double backward = 0.0;
    for (std::size_t j = 0; j < from.e.size(); ++j) {
        forward += (to.e[j] - from.drift[j]) * (to.e[j] - from.drift[j]);
        backward += (from.e[j] - to.drift[j]) * (from.e[j] - to.drift[j]);
    }
    return to.logDensity - from.logDensity - (backward - forward) / (2.0 * stepSize);
}

/// One MALA transition; returns whether the proposal was accepted.
inline bool malaStepCell(const PosteriorCell& c, ChainState& state, double stepSize, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sd = std::sqrt(stepSize);
    std::vector<double> prop(state.e.size());
    for (std::size_t j = 0; j < prop.size(); ++j) prop[j] = state.drift[j] + sd * normal(rng);
    ChainState next = makeChainState(c, std::move(prop), stepSize);
    const double logRatio = malaLogAcceptance(state, next, stepSize);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double u = uniform(rng);
    if (std::isfinite(next.logDensity) && std::log(u) < logRatio) {
        state = std::move(next);
        return true;
    }
    return false;
}

struct CellChain {
    long cellId = 0;
    double acceptanceRate = 0.0;
    std::vector<double> e0;                    // retained draws of e(s, t_0)
    std::vector<std::vector<double>> samples;  // retained noise vectors (if kept)
    std::vector<double> postMean;              // per epoch
    std::vector<double> postSd;
    double intensityMean = 0.0;                // Lambda_e(t_m) DD, current year
    double intensitySd = 0.0;
};

struct ChainOutput {
    std::vector<CellChain> cells;
    std::vector<std::string> warnings;
    MalaConfig config;
};

/// Runs one chain from e = 0 for the given cell; the stream is keyed by cell id.
inline CellChain runCellChain(const PosteriorCell& c, long cellId, const MalaConfig& cfg)
{
    cfg.validate();
    Rng rng = makeStream(cfg.seed, Stream::Mala, static_cast<std::uint64_t>(cellId));
    ChainState state = makeChainState(c, std::vector<double>(c.size(), 0.0), cfg.stepSize);
    for (int b = 0; b < cfg.burnIn; ++b) malaStepCell(c, state, cfg.stepSize, rng);

    CellChain out;
    out.cellId = cellId;
    const std::size_t n = c.size();
    std::vector<double> sum(n, 0.0), sumSq(n, 0.0);
    double iSum = 0.0, iSumSq = 0.0;
    long accepted = 0;
    long steps = 0;
    out.e0.reserve(static_cast<std::size_t>(cfg.nSamples));
    for (int s = 0; s < cfg.nSamples; ++s) {
        for (int t = 0; t < cfg.thin; ++t) {
            accepted += malaStepCell(c, state, cfg.stepSize, rng) ? 1 : 0;
            ++steps;
        }
        out.e0.push_back(state.e[0]);
        if (cfg.keepFullSamples) out.samples.push_back(state.e);
        for (std::size_t j = 0; j < n; ++j) {
            sum[j] += state.e[j];
            sumSq[j] += state.e[j] * state.e[j];
        }
        const double current = std::exp(c.logIntensity(state.e, n - 1)) * c.exposure;
        iSum += current;
        iSumSq += current * current;
    }
    const double I = cfg.nSamples;
    out.acceptanceRate = static_cast<double>(accepted) / static_cast<double>(steps);
    out.postMean.resize(n);
    out.postSd.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        out.postMean[j] = sum[j] / I;
        out.postSd[j] = I > 1 ? std::sqrt(std::max(0.0, (sumSq[j] - I * out.postMean[j] * out.postMean[j]) / (I - 1))) : 0.0;
    }
    out.intensityMean = iSum / I;
    out.intensitySd = I > 1 ? std::sqrt(std::max(0.0, (iSumSq - I * out.intensityMean * out.intensityMean) / (I - 1))) : 0.0;
    return out;
}

/// Independent chains for every cell (parallel, one stream per cell id).
inline ChainOutput runMonitor(const CountsField& counts, const CovariateField& covariates, const ModelParams& params,
                              const FieldMatrix& mean, double sigma2, const SpaceTimeGrid& grid, const MalaConfig& cfg)
{
    cfg.validate();
    validate(counts, grid);
    validate(covariates, grid);
    checkShape(grid, mean.rows(), mean.cols(), "mean pressure");
    ChainOutput out;
    out.config = cfg;
    out.cells.resize(grid.nCells());
    parallelFor(grid.nCells(), [&](std::size_t i) {
        const auto cell = makePosteriorCell(grid, i, mean, counts, covariates, params, sigma2);
        out.cells[i] = runCellChain(cell, grid.cell(i).id, cfg);
    });
    for (const auto& c : out.cells) {
        if (c.acceptanceRate < 0.01 || c.acceptanceRate > 0.999) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "cell %ld: acceptance rate %.4f outside [0.01, 0.999]; retune step size",
                          c.cellId, c.acceptanceRate);
            out.warnings.emplace_back(buf);
        }
    }
    return out;
}

struct ForecastResult {
    std::vector<double> intensityMean;  // per cell, expected count next interval
    std::vector<double> intensitySd;
    std::vector<long> totals;           // one posterior-predictive total per draw
    std::map<long, long> histogram;     // total count -> number of draws

    /// Central interval of the predictive totals, inclusive integer bounds.
    std::pair<long, long> centralInterval(double level) const
    {
        require(!totals.empty(), "forecast: no draws");
        std::vector<long> sorted(totals);
        std::sort(sorted.begin(), sorted.end());
        const double tail = (1.0 - level) / 2.0;
        const double last = static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(tail * last));
        const auto hi = static_cast<std::size_t>(std::ceil((1.0 - tail) * last));
        return {sorted[lo], sorted[hi]};
    }
};

/// Posterior-predictive counts for the interval after the last epoch.
///
/// Draw i of cell s uses X_i(s,t0) = m(s,t0) + e_0^(i) from the chain and fresh
/// noise E_i ~ Normal(0, sigma^2) at the forecast epoch:
///   exp[theta1 + theta2 V_next + alpha (X_i(s,t0) - m_next - E_i)] Delta Delta(s).
/// The aggregate total of draw i is Poisson with the summed intensity.
inline ForecastResult forecastIntensity(const ChainOutput& chain, const ModelParams& params, double sigma2,
                                        const SpaceTimeGrid& grid, const FieldMatrix& mean,
                                        std::span<const double> meanNext, std::span<const double> productionNext,
                                        std::uint64_t seed)
{
    require(chain.cells.size() == grid.nCells(), "forecast: chain does not match grid");
    require(meanNext.size() == grid.nCells(), "forecast: missing mean pressure for the forecast epoch");
    require(productionNext.size() == grid.nCells(), "forecast: missing production covariate for the forecast year");
    require(sigma2 >= 0.0, "forecast: sigma2 must be >= 0");
    const std::size_t I = chain.cells.front().e0.size();
    require(I >= 1, "forecast: no posterior samples");
    for (const auto& c : chain.cells) require(c.e0.size() == I, "forecast: unequal posterior sample counts");

    const double sd = std::sqrt(sigma2);
    Eigen::MatrixXd draws(static_cast<Eigen::Index>(grid.nCells()), static_cast<Eigen::Index>(I));
    parallelFor(grid.nCells(), [&](std::size_t i) {
        Rng rng = makeStream(seed, Stream::Forecast, static_cast<std::uint64_t>(grid.cell(i).id));
        std::normal_distribution<double> normal(0.0, 1.0);
        const auto row = static_cast<Eigen::Index>(i);
        const double base = params.theta1 + params.theta2 * productionNext[i];
        for (std::size_t d = 0; d < I; ++d) {
            const double fresh = sd > 0.0 ? sd * normal(rng) : 0.0;
            const double x0 = mean(row, 0) + chain.cells[i].e0[d];
            draws(row, static_cast<Eigen::Index>(d)) =
                std::exp(base + params.alpha * (x0 - meanNext[i] - fresh)) * grid.exposure(i);
        }
    });
    if (!draws.allFinite()) throw NumericError("forecast: non-finite intensity");

    ForecastResult out;
    for (Eigen::Index i = 0; i < draws.rows(); ++i) {
        const double m = draws.row(i).mean();
        out.intensityMean.push_back(m);
        out.intensitySd.push_back(I > 1 ? std::sqrt((draws.row(i).array() - m).square().sum() / (static_cast<double>(I) - 1)) : 0.0);
    }
    Rng rng = makeStream(seed, Stream::Counts, 0);
    for (std::size_t d = 0; d < I; ++d) {
        const double total = draws.col(static_cast<Eigen::Index>(d)).sum();
        long n = 0;
        if (total > 0.0) {
            std::poisson_distribution<long> poisson(total);
            n = poisson(rng);
        }
        out.totals.push_back(n);
        ++out.histogram[n];
    }
    return out;
}

}  // namespace rscox
