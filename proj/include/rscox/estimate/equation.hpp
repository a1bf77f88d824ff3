#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "rscox/core/error.hpp"
#include "rscox/core/fields.hpp"
#include "rscox/core/grid.hpp"
#include "rscox/core/parallel.hpp"
#include "rscox/core/params.hpp"
#include "rscox/estimate/skeleton.hpp"

namespace rscox {

/// Observed data and fixed inputs of the estimating equation.
struct FitInputs {
    const SpaceTimeGrid& grid;
    const CountsField& counts;
    const CovariateField& covariates;
    const FieldMatrix& mean;  // m(s_i, t_k)
    double sigma2 = 0.0;

    void validate() const
    {
        ::rscox::validate(counts, grid);
        ::rscox::validate(covariates, grid);
        checkShape(grid, mean.rows(), mean.cols(), "mean pressure");
        require(mean.allFinite(), "mean pressure: non-finite value");
        require(sigma2 >= 0.0, "sigma2 must be >= 0");
    }
};

/// F(zeta) and, when requested, J_F(zeta). Dimension 3 in the reduced model
/// (eta = -inf), 4 otherwise.
struct EquationValue {
    Eigen::VectorXd f;
    Eigen::MatrixXd jacobian;
};

/// Evaluates
///   F(zeta) = sum_{i, k>=1} (grad h / h) [N - lambdaHat Delta Delta(s_i)]
/// with grad h / h = (1, V, -dS/dalpha / S, -dS/deta / S) on the mean pressure,
/// and the analytic Jacobian including the count-dependent curvature terms of
/// the alpha and eta rows. Cells are evaluated independently and summed with a
/// fixed pairwise order.
inline EquationValue evaluateEquation(const FitInputs& in, const ModelParams& params, const PressureSamples& samples,
                                      bool withJacobian)
{
    params.validate();
    require(samples.perCell.size() == in.grid.nCells(), "estimating equation: sample set does not match grid");
    const int p = params.reduced() ? 3 : 4;
    const int nt = in.grid.nTimes();
    const double step = in.grid.step();

    struct Partial {
        Eigen::VectorXd f;
        Eigen::MatrixXd j;
        Partial& operator+=(const Partial& o)
        {
            f += o.f;
            j += o.j;
            return *this;
        }
    };
    std::vector<Partial> partials(in.grid.nCells());

    parallelFor(in.grid.nCells(), [&](std::size_t i) {
        const auto row = static_cast<Eigen::Index>(i);
        std::vector<double> m(static_cast<std::size_t>(nt)), v(static_cast<std::size_t>(nt));
        for (int k = 0; k < nt; ++k) {
            m[static_cast<std::size_t>(k)] = in.mean(row, k);
            v[static_cast<std::size_t>(k)] = in.covariates.values(row, k);
        }
        const auto sk = sRecursions(m, params, step, withJacobian);
        const auto lh = lambdaHatCell(samples.perCell[i], v, params, step);
        const double ex = in.grid.exposure(i);

        Partial part{Eigen::VectorXd::Zero(p), Eigen::MatrixXd::Zero(withJacobian ? p : 0, withJacobian ? p : 0)};
        Eigen::VectorXd g(p), dl(p);
        for (int k = 1; k < nt; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            const double s = sk.s[kk];
            const double ga = sk.dAlpha[kk] / s;
            const double ge = sk.dEta[kk] / s;
            g(0) = 1.0;
            g(1) = v[kk];
            g(2) = -ga;
            if (p == 4) g(3) = -ge;
            const double resid = in.counts.values(row, k) - lh.value[kk] * ex;
            part.f += g * resid;
            if (!withJacobian) continue;
            dl(0) = lh.value[kk];
            dl(1) = v[kk] * lh.value[kk];
            dl(2) = lh.dAlpha[kk];
            if (p == 4) dl(3) = lh.dEta[kk];
            part.j.noalias() -= g * dl.transpose() * ex;
            part.j(2, 2) += (ga * ga - sk.dAlpha2[kk] / s) * resid;
            if (p == 4) {
                const double mixed = (ga * ge - sk.dAlphaEta[kk] / s) * resid;
                part.j(2, 3) += mixed;
                part.j(3, 2) += mixed;
                part.j(3, 3) += (ge * ge - sk.dEta2[kk] / s) * resid;
            }
        }
        partials[i] = std::move(part);
    });

    const int jp = withJacobian ? p : 0;
    Partial total = pairwiseSum(partials, Partial{Eigen::VectorXd::Zero(p), Eigen::MatrixXd::Zero(jp, jp)});
    if (!total.f.allFinite() || (withJacobian && !total.j.allFinite())) {
        throw NumericError("estimating equation: non-finite value");
    }
    return {total.f, total.j};
}

inline Eigen::VectorXd estimatingFunction(const FitInputs& in, const ModelParams& params, const PressureSamples& samples)
{
    return evaluateEquation(in, params, samples, false).f;
}

inline Eigen::MatrixXd jacobian(const FitInputs& in, const ModelParams& params, const PressureSamples& samples)
{
    return evaluateEquation(in, params, samples, true).jacobian;
}

}  // namespace rscox
