#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rscox/core/error.hpp"
#include "rscox/core/fields.hpp"
#include "rscox/core/grid.hpp"
#include "rscox/core/parallel.hpp"
#include "rscox/core/params.hpp"
#include "rscox/core/random.hpp"

namespace rscox {

/// S(s,t_k) = e^eta step sum_{i<k} e^{-alpha (y_i - y_k)} + e^{-alpha (y_0 - y_k)}
/// and its partial derivatives along one pressure series y, k = 0..m.
struct SkeletonSeries {
    std::vector<double> s;
    std::vector<double> dAlpha;
    std::vector<double> dEta;
    std::vector<double> dAlpha2;
    std::vector<double> dAlphaEta;
    std::vector<double> dEta2;
};

/// Forward recursion
///   S_k = (S_{k-1} + e^eta step) e^{-alpha (y_{k-1} - y_k)},  S_0 = 1,
/// with all derivative base cases zero. Second derivatives are only filled
/// when withSecond is set.
inline SkeletonSeries sRecursions(std::span<const double> y, const ModelParams& params, double step,
                                  bool withSecond = true)
{
    require(!y.empty(), "sRecursions: empty series");
    const std::size_t n = y.size();
    const double ed = params.expRatio() * step;
    const double a = params.alpha;
    SkeletonSeries out;
    out.s.assign(n, 0.0);
    out.dAlpha.assign(n, 0.0);
    out.dEta.assign(n, 0.0);
    if (withSecond) {
        out.dAlpha2.assign(n, 0.0);
        out.dAlphaEta.assign(n, 0.0);
        out.dEta2.assign(n, 0.0);
    }
    out.s[0] = 1.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double drop = y[k - 1] - y[k];
        const double decay = std::exp(-a * drop);
        out.s[k] = (out.s[k - 1] + ed) * decay;
        out.dAlpha[k] = out.dAlpha[k - 1] * decay - drop * out.s[k];
        out.dEta[k] = (out.dEta[k - 1] + ed) * decay;
        if (withSecond) {
            out.dAlpha2[k] = out.dAlpha2[k - 1] * decay - drop * (out.dAlpha[k] + out.dAlpha[k - 1] * decay);
            out.dAlphaEta[k] = out.dAlphaEta[k - 1] * decay - drop * out.dEta[k];
            out.dEta2[k] = out.dEta[k];
        }
    }
    for (double v : out.s) {
        if (!(v > 0.0) || !std::isfinite(v)) throw NumericError("sRecursions: skeleton left (0, inf)");
    }
    return out;
}

/// Skeleton partials on the mean pressure for every cell and epoch.
struct SkeletonCache {
    FieldMatrix s, dAlpha, dEta, dAlpha2, dAlphaEta, dEta2;
};

inline SkeletonCache buildSkeleton(const FieldMatrix& mean, const ModelParams& params, double step)
{
    const auto rows = mean.rows();
    const auto cols = mean.cols();
    SkeletonCache c{FieldMatrix(rows, cols), FieldMatrix(rows, cols), FieldMatrix(rows, cols),
                    FieldMatrix(rows, cols), FieldMatrix(rows, cols), FieldMatrix(rows, cols)};
    std::vector<double> row(static_cast<std::size_t>(cols));
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index k = 0; k < cols; ++k) row[static_cast<std::size_t>(k)] = mean(i, k);
        const auto sk = sRecursions(row, params, step);
        for (Eigen::Index k = 0; k < cols; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            c.s(i, k) = sk.s[kk];
            c.dAlpha(i, k) = sk.dAlpha[kk];
            c.dEta(i, k) = sk.dEta[kk];
            c.dAlpha2(i, k) = sk.dAlpha2[kk];
            c.dAlphaEta(i, k) = sk.dAlphaEta[kk];
            c.dEta2(i, k) = sk.dEta2[kk];
        }
    }
    return c;
}

/// h(s,t_k) = e^{theta1 + theta2 V} / S(s,t_k): the intensity when sigma^2 = 0.
inline double skeletonH(std::span<const double> meanSeries, int k, double covariate, const ModelParams& params,
                        double step)
{
    require(k >= 0 && static_cast<std::size_t>(k) < meanSeries.size(), "skeletonH: epoch out of range");
    const auto sk = sRecursions(meanSeries.first(static_cast<std::size_t>(k) + 1), params, step, false);
    return checkedFinite(std::exp(params.theta1 + params.theta2 * covariate) / sk.s[static_cast<std::size_t>(k)],
                         "skeletonH");
}

/// Frozen Monte Carlo pressure draws X_l = m + E_l, one L x nTimes block per cell.
struct PressureSamples {
    std::vector<Eigen::MatrixXd> perCell;
    std::uint64_t seed = 0;

    int size() const { return perCell.empty() ? 0 : static_cast<int>(perCell.front().rows()); }
};

inline PressureSamples drawPressureSamples(const SpaceTimeGrid& grid, const FieldMatrix& mean, double sigma2, int L,
                                           std::uint64_t seed)
{
    require(L >= 1, "pressure samples: L must be >= 1");
    require(sigma2 >= 0.0, "pressure samples: sigma2 must be >= 0");
    checkShape(grid, mean.rows(), mean.cols(), "mean pressure");
    PressureSamples out;
    out.seed = seed;
    out.perCell.resize(grid.nCells());
    const double sd = std::sqrt(sigma2);
    parallelFor(grid.nCells(), [&](std::size_t i) {
        Rng rng = makeStream(seed, Stream::McPressure, static_cast<std::uint64_t>(grid.cell(i).id));
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::MatrixXd block(L, grid.nTimes());
        for (int l = 0; l < L; ++l) {
            for (int k = 0; k < grid.nTimes(); ++k) {
                block(l, k) = mean(static_cast<Eigen::Index>(i), k) + (sd > 0.0 ? sd * normal(rng) : 0.0);
            }
        }
        out.perCell[i] = std::move(block);
    });
    return out;
}

/// lambdaHat and its alpha/eta partials for one cell, all epochs.
struct LambdaHatSeries {
    std::vector<double> value;
    std::vector<double> dAlpha;
    std::vector<double> dEta;
};

/// lambdaHat(s,t_k) = e^{theta1 + theta2 V_k} (1/L) sum_l 1 / S_{X_l}(s,t_k),
/// with d lambdaHat = e^{theta1 + theta2 V_k} (1/L) sum_l -dS_{X_l} / S_{X_l}^2.
inline LambdaHatSeries lambdaHatCell(const Eigen::MatrixXd& samples, std::span<const double> covariates,
                                     const ModelParams& params, double step)
{
    const auto L = samples.rows();
    const auto n = static_cast<std::size_t>(samples.cols());
    require(L >= 1, "lambdaHat: no samples");
    require(covariates.size() == n, "lambdaHat: covariate length mismatch");
    std::vector<double> inv(n, 0.0), dA(n, 0.0), dE(n, 0.0);
    const double ed = params.expRatio() * step;
    const double a = params.alpha;
    for (Eigen::Index l = 0; l < L; ++l) {
        double s = 1.0, sa = 0.0, se = 0.0;
        inv[0] += 1.0;
        for (std::size_t k = 1; k < n; ++k) {
            const double drop = samples(l, static_cast<Eigen::Index>(k) - 1) - samples(l, static_cast<Eigen::Index>(k));
            const double decay = std::exp(-a * drop);
            s = (s + ed) * decay;
            sa = sa * decay - drop * s;
            se = (se + ed) * decay;
            const double is = 1.0 / s;
            inv[k] += is;
            dA[k] -= sa * is * is;
            dE[k] -= se * is * is;
        }
    }
    LambdaHatSeries out{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t k = 0; k < n; ++k) {
        const double base = std::exp(params.theta1 + params.theta2 * covariates[k]) / static_cast<double>(L);
        out.value[k] = checkedFinite(base * inv[k], "lambdaHat");
        out.dAlpha[k] = base * dA[k];
        out.dEta[k] = base * dE[k];
    }
    return out;
}

/// lambdaHat for one cell and epoch.
inline double lambdaHat(const PressureSamples& samples, const SpaceTimeGrid& grid, const CovariateField& v,
                        std::size_t cell, int k, const ModelParams& params)
{
    std::vector<double> row(static_cast<std::size_t>(grid.nTimes()));
    for (int j = 0; j < grid.nTimes(); ++j) row[static_cast<std::size_t>(j)] = v.values(static_cast<Eigen::Index>(cell), j);
    return lambdaHatCell(samples.perCell.at(cell), row, params, grid.step()).value.at(static_cast<std::size_t>(k));
}

}  // namespace rscox
