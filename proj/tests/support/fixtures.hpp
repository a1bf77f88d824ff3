#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rscox/core/fields.hpp"
#include "rscox/core/grid.hpp"
#include "rscox/core/params.hpp"

namespace fixture {

/// Small random problem: nCells cells of random area, decreasing mean
/// pressure and non-negative production.
struct Problem {
    rscox::SpaceTimeGrid grid;
    rscox::FieldMatrix mean;
    rscox::CovariateField covariates;
};

inline Problem randomProblem(int nCells, int nSteps, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<rscox::Cell> cells;
    for (int i = 0; i < nCells; ++i) cells.push_back({i, u(rng), u(rng), 0.5 + 2.0 * u(rng)});
    rscox::SpaceTimeGrid grid(cells, 2000.0, 1.0, nSteps);
    rscox::FieldMatrix mean(nCells, nSteps + 1);
    rscox::FieldMatrix prod(nCells, nSteps + 1);
    for (int i = 0; i < nCells; ++i) {
        double m = 150.0 + 30.0 * u(rng);
        const double rate = 1.0 + 4.0 * u(rng);
        for (int k = 0; k <= nSteps; ++k) {
            mean(i, k) = m;
            m -= rate * (0.5 + u(rng));
            prod(i, k) = 0.2 * u(rng);
        }
    }
    return {std::move(grid), std::move(mean), rscox::CovariateField{std::move(prod)}};
}

/// Reduced-model integer "expected counts": chooses covariates so that
/// exp(theta1 + theta2 V + alpha (m_0 - m_k)) * exposure equals the target
/// count exactly, making F(zeta0) = 0 at sigma2 = 0.
inline rscox::CountsField integerExpectations(const Problem& p, const rscox::ModelParams& zeta,
                                              rscox::CovariateField& covariates, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> target(1, 9);
    rscox::CountsField n{rscox::CountMatrix::Zero(p.mean.rows(), p.mean.cols())};
    covariates.values = rscox::FieldMatrix::Zero(p.mean.rows(), p.mean.cols());
    for (Eigen::Index i = 0; i < p.mean.rows(); ++i) {
        const double ex = p.grid.exposure(static_cast<std::size_t>(i));
        for (Eigen::Index k = 1; k < p.mean.cols(); ++k) {
            const int c = target(rng);
            n.values(i, k) = c;
            covariates.values(i, k) =
                (std::log(c / ex) - zeta.theta1 - zeta.alpha * (p.mean(i, 0) - p.mean(i, k))) / zeta.theta2;
        }
    }
    return n;
}

}  // namespace fixture
