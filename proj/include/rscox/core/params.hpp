#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "rscox/core/error.hpp"

namespace rscox {

/// zeta = (theta1, theta2, alpha, eta) with eta = log(alpha / gamma0).
///
/// logRatio = -inf is the log-Gaussian limit (gamma0 infinite), in which the
/// intensity depends on the pressure drop X(s,t0) - X(s,t) only.
struct ModelParams {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double alpha = 0.01;
    double logRatio = -std::numeric_limits<double>::infinity();

    bool reduced() const { return std::isinf(logRatio) && logRatio < 0.0; }

    /// e^eta, zero in the reduced model.
    double expRatio() const { return reduced() ? 0.0 : std::exp(logRatio); }

    /// gamma0 = alpha * e^-eta; infinite in the reduced model.
    double gamma0() const { return reduced() ? std::numeric_limits<double>::infinity() : alpha * std::exp(-logRatio); }

    /// c = exp(alpha^2 sigma^2).
    double cFactor(double sigma2) const { return std::exp(alpha * alpha * sigma2); }

    void validate() const
    {
        require(std::isfinite(theta1) && std::isfinite(theta2), "params: theta must be finite");
        require(alpha > 0.0 && std::isfinite(alpha), "params: alpha must be positive");
        require(!std::isnan(logRatio) && logRatio != std::numeric_limits<double>::infinity(),
                "params: logRatio must be finite or -inf");
    }

    /// Active parameter vector: 3 entries in the reduced model, 4 otherwise.
    Eigen::VectorXd vector() const
    {
        if (reduced()) return Eigen::Vector3d(theta1, theta2, alpha);
        return Eigen::Vector4d(theta1, theta2, alpha, logRatio);
    }

    static ModelParams fromVector(const Eigen::VectorXd& v)
    {
        ModelParams p{v(0), v(1), v(2)};
        if (v.size() == 4) p.logRatio = v(3);
        return p;
    }

    static const char* name(int index)
    {
        static const char* names[] = {"theta1", "theta2", "alpha", "eta"};
        return names[index];
    }
};

/// Text form of a log-ratio, keeping -inf representable.
inline std::string formatLogRatio(double eta)
{
    if (std::isinf(eta) && eta < 0) return "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", eta);
    return buf;
}

inline double parseLogRatio(const std::string& text)
{
    if (text == "-inf" || text == "-Inf" || text == "-infinity") {
        return -std::numeric_limits<double>::infinity();
    }
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        throw InputError("params: cannot parse log-ratio '" + text + "'");
    }
    require(used == text.size(), "params: cannot parse log-ratio '" + text + "'");
    return value;
}

}  // namespace rscox
