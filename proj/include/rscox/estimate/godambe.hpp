#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "rscox/core/error.hpp"
#include "rscox/core/fields.hpp"
#include "rscox/core/grid.hpp"
#include "rscox/core/params.hpp"

namespace rscox {

/// l = E[D e^{theta1 + theta2 V} e^{alpha D}] for D = X(s,t0) - X(s,t) ~ Normal(meanDrop, 2 sigma^2):
/// e^{theta1 + theta2 V} (meanDrop + 2 alpha sigma^2) e^{alpha meanDrop + alpha^2 sigma^2}.
inline double lClosedForm(double logBase, double meanDrop, double alpha, double sigma2)
{
    return std::exp(logBase + alpha * meanDrop + alpha * alpha * sigma2) * (meanDrop + 2.0 * alpha * sigma2);
}

struct GodambeReport {
    Eigen::MatrixXd u;        // -E J_F
    Eigen::MatrixXd sigmaF;   // Var F
    Eigen::MatrixXd sandwich; // (U^T Sigma_F^-1 U)^-1
};

/// Grid-sum version of the reduced-model (eta = -inf) sensitivity and
/// variability matrices, with midpoint values weighted by Delta(s_i) Delta over
/// the intervals k >= 1.
inline GodambeReport godambeMatrix(const ModelParams& params, const SpaceTimeGrid& grid, const FieldMatrix& mean,
                                   const CovariateField& v, double sigma2)
{
    params.validate();
    require(params.reduced(), "godambeMatrix: defined for the reduced model (eta = -inf) only");
    checkShape(grid, mean.rows(), mean.cols(), "mean pressure");
    validate(v, grid);
    Eigen::Matrix3d u = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d sf = Eigen::Matrix3d::Zero();
    const double a = params.alpha;
    for (std::size_t i = 0; i < grid.nCells(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const double ex = grid.exposure(i);
        for (int k = 1; k < grid.nTimes(); ++k) {
            const double vv = v.values(row, k);
            const double logBase = params.theta1 + params.theta2 * vv;
            const double drop = mean(row, 0) - mean(row, k);
            const double lam = std::exp(logBase + a * drop + a * a * sigma2);
            const double ell = lClosedForm(logBase, drop, a, sigma2);
            const Eigen::Vector3d g(1.0, vv, drop);
            const Eigen::Vector3d sens(lam, vv * lam, ell);
            u.noalias() += g * sens.transpose() * ex;
            sf.noalias() += g * g.transpose() * lam * ex;
        }
    }
    Eigen::FullPivLU<Eigen::Matrix3d> luS(sf);
    if (!luS.isInvertible()) throw NumericError("godambeMatrix: singular Sigma_F");
    const Eigen::Matrix3d info = u.transpose() * luS.solve(u);
    Eigen::FullPivLU<Eigen::Matrix3d> luI(info);
    if (!luI.isInvertible()) throw NumericError("godambeMatrix: singular Godambe information");
    return {u, sf, luI.inverse()};
}

}  // namespace rscox
