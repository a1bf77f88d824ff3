#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rscox/core/error.hpp"
#include "rscox/core/params.hpp"
#include "rscox/estimate/equation.hpp"
#include "rscox/estimate/skeleton.hpp"
#include "rscox/rate.hpp"

namespace rscox {

struct NewtonOptions {
    /// Converged when max|F| < tolFactor * max(1, total count).
    double tolFactor = 1e-8;
    int maxIterations = 100;
    int maxHalvings = 30;
    /// Solve with eta fixed at -inf (3 parameters) instead of the full 4-parameter system.
    bool reducedMode = true;
    /// In full mode, eta below this floor for pinAfter consecutive iterations is pinned to -inf.
    double etaFloor = -40.0;
    int pinAfter = 3;
    /// Monte Carlo sample size L for lambdaHat, drawn once per solve.
    int mcSamples = 1000;
    std::uint64_t mcSeed = 1;
};

struct IterationRecord {
    int iteration = 0;
    ModelParams params;
    double residual = 0.0;
    int halvings = 0;
};

struct FitResult {
    ModelParams zetaHat;
    int iterations = 0;
    bool converged = false;
    double finalResidual = std::numeric_limits<double>::infinity();
    std::string message;
    std::vector<IterationRecord> trace;
    /// Sandwich variance (U^T Sigma_F^-1 U)^-1, reduced model only.
    Eigen::MatrixXd godambe;
    std::vector<CiPair> bootstrapCis;
    double sigma2 = 0.0;
    int mcSamples = 0;
    std::uint64_t mcSeed = 0;
};

/// Starting point: theta1 from total count over total exposure, theta2 = 0,
/// alpha = 0.01, eta = -10 (full mode) or -inf (reduced mode).
inline ModelParams defaultInitial(const FitInputs& in, bool reducedMode)
{
    double exposure = 0.0;
    for (std::size_t i = 0; i < in.grid.nCells(); ++i) exposure += in.grid.exposure(i) * in.grid.nSteps();
    const double total = std::max<double>(static_cast<double>(in.counts.total()), 0.5);
    ModelParams p{std::log(total / exposure), 0.0, 0.01};
    p.logRatio = reducedMode ? -std::numeric_limits<double>::infinity() : -10.0;
    return p;
}

namespace detail {
inline double supNorm(const Eigen::VectorXd& v) { return v.lpNorm<Eigen::Infinity>(); }
}  // namespace detail

/// Newton iteration J_F(zeta_n) (zeta_{n+1} - zeta_n) = -F(zeta_n) on frozen
/// Monte Carlo samples, with step halving until max|F| decreases and alpha
/// stays positive.
inline FitResult newtonSolve(const FitInputs& in, const ModelParams& init, const NewtonOptions& opts,
                             const PressureSamples& samples)
{
    in.validate();
    ModelParams params = init;
    if (opts.reducedMode) params.logRatio = -std::numeric_limits<double>::infinity();
    params.validate();

    FitResult result;
    result.sigma2 = in.sigma2;
    result.mcSamples = samples.size();
    result.mcSeed = samples.seed;
    const double tol = opts.tolFactor * std::max<double>(1.0, static_cast<double>(in.counts.total()));

    EquationValue current = evaluateEquation(in, params, samples, true);
    double norm = detail::supNorm(current.f);
    result.trace.push_back({0, params, norm, 0});
    int belowFloor = 0;

    for (int iter = 1; iter <= opts.maxIterations; ++iter) {
        if (norm < tol) {
            result.converged = true;
            break;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(current.jacobian);
        if (!lu.isInvertible()) {
            throw NumericError("newtonSolve: singular Jacobian at iteration " + std::to_string(iter));
        }
        const Eigen::VectorXd delta = lu.solve(-current.f);
        if (!delta.allFinite()) {
            throw NumericError("newtonSolve: non-finite Newton step at iteration " + std::to_string(iter));
        }

        const Eigen::VectorXd base = params.vector();
        double t = 1.0;
        bool accepted = false;
        int halvings = 0;
        ModelParams candidate;
        EquationValue next;
        for (; halvings <= opts.maxHalvings; ++halvings, t *= 0.5) {
            candidate = ModelParams::fromVector(base + t * delta);
            if (!(candidate.alpha > 0.0)) continue;
            try {
                next = evaluateEquation(in, candidate, samples, true);
            } catch (const NumericError&) {
                continue;
            }
            if (detail::supNorm(next.f) < norm) {
                accepted = true;
                break;
            }
        }
        result.iterations = iter;
        if (!accepted) {
            result.message = "step halving failed to reduce |F| at iteration " + std::to_string(iter);
            break;
        }
        params = candidate;
        current = std::move(next);
        norm = detail::supNorm(current.f);

        if (!params.reduced()) {
            belowFloor = params.logRatio < opts.etaFloor ? belowFloor + 1 : 0;
            if (belowFloor >= opts.pinAfter) {
                params.logRatio = -std::numeric_limits<double>::infinity();
                current = evaluateEquation(in, params, samples, true);
                norm = detail::supNorm(current.f);
                result.message = "eta pinned to -inf at iteration " + std::to_string(iter);
            }
        }
        result.trace.push_back({iter, params, norm, halvings});
    }
    if (!result.converged && norm < tol) result.converged = true;
    if (!result.converged && result.message.empty()) {
        result.message = "no convergence after " + std::to_string(opts.maxIterations) + " iterations";
    }
    result.zetaHat = params;
    result.finalResidual = norm;
    return result;
}

inline FitResult newtonSolve(const FitInputs& in, const ModelParams& init, const NewtonOptions& opts)
{
    const auto samples = drawPressureSamples(in.grid, in.mean, in.sigma2, opts.mcSamples, opts.mcSeed);
    return newtonSolve(in, init, opts, samples);
}

}  // namespace rscox
