#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rscox/core/error.hpp"

namespace rscox {

/// State Gamma(s, t_k), k = 0..m, for one cell.
struct StateTrajectory {
    std::vector<double> gamma;
};

/// One step of the Euler recursion:
/// Gamma_{k+1} = (Gamma_k + alpha*step) * exp(alpha * (x_{k+1} - x_k)).
inline double gammaEulerStep(double gammaK, double xK, double xK1, double alpha, double step)
{
    require(gammaK >= 0.0, "gammaEulerStep: state must be non-negative");
    const double next = (gammaK + alpha * step) * std::exp(alpha * (xK1 - xK));
    return checkedFinite(next, "gammaEulerStep");
}

namespace detail {
inline double logAddExp(double a, double b)
{
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}
}  // namespace detail

/// Closed-form solution of the Euler recursion,
/// Gamma(t_k) = e^{alpha x_k} { alpha*step * sum_{i<k} e^{-alpha x_i} + gamma0 e^{-alpha x_0} }.
///
/// The bracket is accumulated in log space so large alpha*x products do not
/// overflow before the final exponential.
inline StateTrajectory gammaClosedForm(std::span<const double> x, double alpha, double gamma0, double step)
{
    require(!x.empty(), "gammaClosedForm: empty pressure series");
    require(alpha > 0.0, "gammaClosedForm: alpha must be positive");
    require(gamma0 >= 0.0, "gammaClosedForm: gamma0 must be non-negative");
    require(step > 0.0, "gammaClosedForm: step must be positive");
    for (double v : x) require(std::isfinite(v), "gammaClosedForm: non-finite pressure");

    StateTrajectory out;
    out.gamma.resize(x.size());
    out.gamma[0] = gamma0;
    const double logDrift = std::log(alpha * step);
    // log{ gamma0 e^{-alpha x_0} + alpha*step * sum_{i<k} e^{-alpha x_i} }
    double logBracket = gamma0 > 0.0 ? std::log(gamma0) - alpha * x[0] : -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < x.size(); ++k) {
        logBracket = detail::logAddExp(logBracket, logDrift - alpha * x[k - 1]);
        out.gamma[k] = checkedFinite(std::exp(alpha * x[k] + logBracket), "gammaClosedForm");
    }
    return out;
}

/// Moment inputs for one cell: mean series m(s,t_k), alpha, gamma0, sigma^2, step.
struct MomentSpec {
    std::vector<double> meanSeries;
    double alpha = 0.0;
    double gamma0 = 0.0;
    double sigma2 = 0.0;
    double step = 1.0;
    double cFactor = 1.0;   // exp(alpha^2 sigma^2)
    Eigen::MatrixXd fTable; // f_ij = exp(alpha (m_i - m_j))

    int lastIndex() const { return static_cast<int>(meanSeries.size()) - 1; }
    double f(int i, int j) const { return fTable(i, j); }
};

inline MomentSpec makeMomentSpec(std::vector<double> meanSeries, double alpha, double gamma0, double sigma2, double step)
{
    require(!meanSeries.empty(), "MomentSpec: empty mean series");
    require(alpha > 0.0, "MomentSpec: alpha must be positive");
    require(gamma0 >= 0.0 && std::isfinite(gamma0), "MomentSpec: gamma0 must be finite and >= 0");
    require(sigma2 >= 0.0, "MomentSpec: sigma2 must be >= 0");
    require(step > 0.0, "MomentSpec: step must be positive");
    MomentSpec spec;
    spec.meanSeries = std::move(meanSeries);
    spec.alpha = alpha;
    spec.gamma0 = gamma0;
    spec.sigma2 = sigma2;
    spec.step = step;
    spec.cFactor = std::exp(alpha * alpha * sigma2);
    const auto n = static_cast<Eigen::Index>(spec.meanSeries.size());
    spec.fTable.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            spec.fTable(i, j) = checkedFinite(std::exp(alpha * (spec.meanSeries[i] - spec.meanSeries[j])),
                                              "MomentSpec f table");
        }
    }
    return spec;
}

inline void checkIndex(const MomentSpec& spec, int k)
{
    require(k >= 0 && k <= spec.lastIndex(), "moment index " + std::to_string(k) + " out of range");
}

/// E Gamma(t_k) = c (alpha*step * sum_{i<k} f_ki + gamma0 f_k0); Gamma(t_0) = gamma0.
inline double stateMean(const MomentSpec& spec, int k)
{
    checkIndex(spec, k);
    if (k == 0) return spec.gamma0;
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += spec.f(k, i);
    const double ad = spec.alpha * spec.step;
    return checkedFinite(spec.cFactor * (ad * sum + spec.gamma0 * spec.f(k, 0)), "stateMean");
}

/// Exact Cov(Gamma(t_k), Gamma(t_l)) under independent Gaussian noise.
/// Symmetric in (k, l); zero whenever either index is 0.
inline double stateCov(const MomentSpec& spec, int k, int l)
{
    checkIndex(spec, k);
    checkIndex(spec, l);
    if (k > l) std::swap(k, l);
    if (k == 0) return 0.0;

    const double c = spec.cFactor;
    const double ad = spec.alpha * spec.step;
    const double g0 = spec.gamma0;

    if (k == l) {
        double squares = 0.0;
        double cross = 0.0;
        for (int i = 0; i < k; ++i) {
            squares += spec.f(k, i) * spec.f(k, i);
            for (int j = 0; j < k; ++j) {
                if (j != i) cross += spec.f(k, i) * spec.f(k, j);
            }
        }
        double tail = 0.0;
        for (int i = 1; i < k; ++i) tail += spec.f(0, i);
        const double fk0 = spec.f(k, 0);
        const double v = ad * ad * c * c * (c * c - 1.0) * squares + ad * ad * c * c * (c - 1.0) * cross +
                         2.0 * ad * g0 * c * c * fk0 * fk0 * (c * c - 1.0 + (c - 1.0) * tail) +
                         g0 * g0 * fk0 * fk0 * c * c * (c * c - 1.0);
        return checkedFinite(v, "stateCov");
    }

    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        sum += spec.f(k, i) * spec.f(l, i) * (c - 1.0) - spec.f(l, i) * (1.0 - 1.0 / c);
    }
    const double v = ad * ad * c * c * sum + (2.0 * ad * g0 + g0 * g0) * c * c * spec.f(k, 0) * spec.f(l, 0) * (c - 1.0) -
                     ad * g0 * c * c * spec.f(l, 0) * (1.0 - 1.0 / c);
    return checkedFinite(v, "stateCov");
}

enum class CovSign {
    NonNegativeAll,   // Cov(Gamma_k, Gamma_l) >= 0 for all k, l
    BoundedNegative,  // Cov - (alpha*step*gamma0 + gamma0^2) c^2 (c-1) f_k0 f_l0 <= 0 for k < l
    Indeterminate,
};

inline const char* toString(CovSign s)
{
    switch (s) {
        case CovSign::NonNegativeAll: return "nonneg-all";
        case CovSign::BoundedNegative: return "bounded-negative";
        case CovSign::Indeterminate: return "indeterminate";
    }
    return "?";
}

/// Sign structure of the state covariance from the shape of the mean series.
///
/// The noise level enters through alpha*sigma^2, the threshold at which
/// c*f_ki >= 1 for a pressure drop m_i - m_k. Increasing (or constant) series
/// are non-negatively correlated. A decreasing series is non-negatively
/// correlated once alpha*sigma^2 covers the total drop m_0 - m_last (implied by
/// alpha*sigma^2 > m_0 for non-negative pressures), and bounded-negative when
/// alpha*sigma^2 is below the smallest drop between consecutive epochs.
inline CovSign covSignClassify(const MomentSpec& spec)
{
    const auto& m = spec.meanSeries;
    if (m.size() < 2 || spec.sigma2 == 0.0) return CovSign::NonNegativeAll;
    bool increasing = true;
    bool decreasing = true;
    double minDrop = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < m.size(); ++i) {
        const double drop = m[i] - m[i + 1];
        if (drop > 0.0) increasing = false;
        if (drop < 0.0) decreasing = false;
        minDrop = std::min(minDrop, drop);
    }
    if (increasing) return CovSign::NonNegativeAll;
    if (!decreasing) return CovSign::Indeterminate;
    const double level = spec.alpha * spec.sigma2;
    if (level >= m.front() - m.back()) return CovSign::NonNegativeAll;
    if (level < minDrop) return CovSign::BoundedNegative;
    return CovSign::Indeterminate;
}

}  // namespace rscox
