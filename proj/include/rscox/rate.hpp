#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "rscox/core/error.hpp"
#include "rscox/core/parallel.hpp"
#include "rscox/core/random.hpp"
#include "rscox/state.hpp"

namespace rscox {

// Second-order (delta method) moments of the rate 1/Gamma.

namespace detail {
inline double positiveMean(const MomentSpec& spec, int k)
{
    const double mu = stateMean(spec, k);
    if (!(mu > 0.0)) {
        throw NumericError("rate approximation: state mean at k=" + std::to_string(k) + " is not positive");
    }
    return mu;
}
}  // namespace detail

/// E[1/Gamma_k] ~ 1/E Gamma_k + Var Gamma_k / (E Gamma_k)^3.
inline double rateMeanApprox(const MomentSpec& spec, int k)
{
    const double mu = detail::positiveMean(spec, k);
    return 1.0 / mu + stateCov(spec, k, k) / (mu * mu * mu);
}

/// Var[1/Gamma_k] ~ Var Gamma_k / (E Gamma_k)^4.
inline double rateVarApprox(const MomentSpec& spec, int k)
{
    const double mu = detail::positiveMean(spec, k);
    return stateCov(spec, k, k) / (mu * mu * mu * mu);
}

/// E[1/(Gamma_k Gamma_l)] from the second-order expansion of 1/(xy) around
/// the means; the first-order terms vanish in expectation.
inline double rateCrossApprox(const MomentSpec& spec, int k, int l)
{
    const double mk = detail::positiveMean(spec, k);
    const double ml = detail::positiveMean(spec, l);
    return 1.0 / (mk * ml) + stateCov(spec, k, l) / (mk * mk * ml * ml) +
           stateCov(spec, k, k) / (ml * mk * mk * mk) + stateCov(spec, l, l) / (mk * ml * ml * ml);
}

struct RateMoments {
    Eigen::VectorXd meanApprox;
    Eigen::VectorXd varApprox;
    Eigen::MatrixXd crossApprox;
};

inline RateMoments rateMomentsApprox(const MomentSpec& spec)
{
    const int n = spec.lastIndex() + 1;
    RateMoments out{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
    for (int k = 0; k < n; ++k) {
        out.meanApprox(k) = rateMeanApprox(spec, k);
        out.varApprox(k) = rateVarApprox(spec, k);
        for (int l = 0; l <= k; ++l) {
            out.crossApprox(k, l) = out.crossApprox(l, k) = rateCrossApprox(spec, k, l);
        }
    }
    return out;
}

/// Monte Carlo sample of 1/Gamma_k over independent trajectories.
struct McRateResult {
    Eigen::MatrixXd samples;  // trajectory x epoch
    Eigen::VectorXd mean;
    Eigen::VectorXd var;      // unbiased
    Eigen::VectorXd meanSe;
    Eigen::VectorXd varSe;
    Eigen::MatrixXd cross;    // sample mean of Y_k Y_l
    Eigen::MatrixXd crossSe;
};

/// Draws nSamples trajectories X = m + E with Gaussian E, solves for Gamma
/// and summarizes Y = 1/Gamma. Trajectory j uses its own stream, so the output
/// depends on (spec, nSamples, seed) only.
inline McRateResult mcRateMoments(const MomentSpec& spec, int nSamples, std::uint64_t seed)
{
    require(nSamples >= 2, "mcRateMoments: need at least 2 samples");
    const int nt = spec.lastIndex() + 1;
    const double sd = std::sqrt(spec.sigma2);
    McRateResult r;
    r.samples.resize(nSamples, nt);
    parallelFor(static_cast<std::size_t>(nSamples), [&](std::size_t j) {
        Rng rng = makeStream(seed, Stream::Replicate, j);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> x(spec.meanSeries);
        for (double& v : x) v += sd * normal(rng);
        const auto traj = gammaClosedForm(x, spec.alpha, spec.gamma0, spec.step);
        for (int k = 0; k < nt; ++k) r.samples(static_cast<Eigen::Index>(j), k) = 1.0 / traj.gamma[k];
    });

    const double n = nSamples;
    r.mean = r.samples.colwise().mean().transpose();
    const Eigen::MatrixXd centered = r.samples.rowwise() - r.mean.transpose();
    r.var = (centered.array().square().colwise().sum() / (n - 1.0)).transpose();
    r.meanSe = (r.var.array() / n).sqrt();
    const Eigen::VectorXd m4 = (centered.array().pow(4).colwise().sum() / n).transpose();
    r.varSe = ((m4.array() - r.var.array().square()).max(0.0) / n).sqrt();
    r.cross = r.samples.transpose() * r.samples / n;
    r.crossSe.resize(nt, nt);
    for (int k = 0; k < nt; ++k) {
        for (int l = 0; l <= k; ++l) {
            const Eigen::ArrayXd prod = r.samples.col(k).array() * r.samples.col(l).array();
            const double v = (prod - r.cross(k, l)).square().sum() / (n - 1.0);
            r.crossSe(k, l) = r.crossSe(l, k) = std::sqrt(v / n);
        }
    }
    return r;
}

struct CiPair {
    double lo = 0.0;
    double hi = 0.0;
    double level = 0.95;

    bool contains(double v) const { return lo <= v && v <= hi; }
};

inline double normalQuantile(double p)
{
    require(p > 0.0 && p < 1.0, "normalQuantile: probability must be in (0,1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

/// Median with the midpoint convention for even sizes.
inline double sampleMedian(std::span<const double> sample)
{
    require(!sample.empty(), "median of empty sample");
    std::vector<double> v(sample.begin(), sample.end());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

namespace detail {
inline void meanAndVar(std::span<const double> s, double& mean, double& var)
{
    require(s.size() >= 2, "confidence interval: sample size must be >= 2");
    mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    var /= static_cast<double>(s.size() - 1);
}
}  // namespace detail

/// Normal-theory interval Ybar +- xi * S / sqrt(n).
inline CiPair meanCi(std::span<const double> sample, double level)
{
    double mean = 0.0, var = 0.0;
    detail::meanAndVar(sample, mean, var);
    const double xi = normalQuantile(0.5 + level / 2.0);
    const double half = xi * std::sqrt(var / static_cast<double>(sample.size()));
    return {mean - half, mean + half, level};
}

/// Kurtosis factor zeta = (g4 - 1)/2 with g4 = n sum (Y - med)^4 / ((n-1)^2 S^4).
inline double kurtosisFactor(std::span<const double> sample)
{
    double mean = 0.0, var = 0.0;
    detail::meanAndVar(sample, mean, var);
    const double med = sampleMedian(sample);
    double m4 = 0.0;
    for (double v : sample) m4 += std::pow(v - med, 4);
    const double n = static_cast<double>(sample.size());
    const double g4 = n * m4 / ((n - 1.0) * (n - 1.0) * var * var);
    return 0.5 * (g4 - 1.0);
}

/// Variance interval (S^2 / (1 + xi sqrt(2 zeta/(n-1))), S^2 / (1 - xi sqrt(2 zeta/(n-1)))).
/// Throws when the kurtosis estimate makes the upper denominator non-positive.
inline CiPair varCiWithFactor(std::span<const double> sample, double level, double zeta)
{
    double mean = 0.0, var = 0.0;
    detail::meanAndVar(sample, mean, var);
    const double n = static_cast<double>(sample.size());
    const double xi = normalQuantile(0.5 + level / 2.0);
    if (!(zeta >= 0.0)) {
        throw NumericError("varCi: kurtosis factor is negative or undefined (zeta=" + std::to_string(zeta) + ")");
    }
    const double spread = xi * std::sqrt(2.0 * zeta / (n - 1.0));
    if (!(1.0 - spread > 0.0)) {
        throw NumericError("varCi: kurtosis too large for sample size, 1 - xi*sqrt(2 zeta/(n-1)) = " +
                           std::to_string(1.0 - spread));
    }
    return {var / (1.0 + spread), var / (1.0 - spread), level};
}

inline CiPair varCi(std::span<const double> sample, double level)
{
    return varCiWithFactor(sample, level, kurtosisFactor(sample));
}

/// One row of the approximation-vs-simulation table.
struct MomentCheckRow {
    int k = 0;
    double mcMean = 0.0;
    CiPair meanCi;
    double meanApprox = 0.0;
    bool meanInside = false;
    double mcVar = 0.0;
    CiPair varCi;
    double varApprox = 0.0;
    bool varInside = false;
};

/// Compares the delta approximations with pointwise confidence intervals from
/// a Monte Carlo sample, for k = 1..m.
inline std::vector<MomentCheckRow> compareRateMoments(const MomentSpec& spec, int nSamples, double level,
                                                      std::uint64_t seed)
{
    const auto mc = mcRateMoments(spec, nSamples, seed);
    std::vector<MomentCheckRow> rows;
    for (int k = 1; k <= spec.lastIndex(); ++k) {
        std::vector<double> col(mc.samples.col(k).data(), mc.samples.col(k).data() + nSamples);
        MomentCheckRow row;
        row.k = k;
        row.mcMean = mc.mean(k);
        row.meanCi = meanCi(col, level);
        row.meanApprox = rateMeanApprox(spec, k);
        row.meanInside = row.meanCi.contains(row.meanApprox);
        row.mcVar = mc.var(k);
        row.varCi = varCi(col, level);
        row.varApprox = rateVarApprox(spec, k);
        row.varInside = row.varCi.contains(row.varApprox);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace rscox
