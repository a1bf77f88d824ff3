#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rscox/core/error.hpp"
#include "rscox/core/fields.hpp"
#include "rscox/io/ingest.hpp"

namespace rscox::io {

/// Centering and scaling of (x, y, t) applied before forming monomials.
struct CoordinateScaling {
    double cx = 0.0, sx = 1.0;
    double cy = 0.0, sy = 1.0;
    double ct = 0.0, st = 1.0;
};

/// Polynomial trend design. Columns, in order:
///   x^a y^b          for 0 <= a+b <= spatialOrder (by total degree, then decreasing a),
///   t^c              for 1 <= c <= temporalOrder,
///   t^c x^a y^b      for 1 <= c <= interactionTimeOrder, 1 <= a+b <= interactionSpaceOrder.
/// The defaults (4, 2, 1, 3) give 15 + 2 + 9 = 26 columns.
struct DesignSpec {
    int spatialOrder = 4;
    int temporalOrder = 2;
    int interactionTimeOrder = 1;
    int interactionSpaceOrder = 3;
};

struct Monomial {
    int a = 0, b = 0, c = 0;  // powers of x, y, t
};

inline std::vector<Monomial> designTerms(const DesignSpec& spec)
{
    require(spec.spatialOrder >= 0 && spec.temporalOrder >= 0 && spec.interactionTimeOrder >= 0 &&
                spec.interactionSpaceOrder >= 0,
            "design: orders must be >= 0");
    std::vector<Monomial> terms;
    for (int deg = 0; deg <= spec.spatialOrder; ++deg) {
        for (int a = deg; a >= 0; --a) terms.push_back({a, deg - a, 0});
    }
    for (int c = 1; c <= spec.temporalOrder; ++c) terms.push_back({0, 0, c});
    for (int c = 1; c <= spec.interactionTimeOrder; ++c) {
        for (int deg = 1; deg <= spec.interactionSpaceOrder; ++deg) {
            for (int a = deg; a >= 0; --a) terms.push_back({a, deg - a, c});
        }
    }
    return terms;
}

inline std::string termName(const Monomial& m)
{
    std::string s;
    auto add = [&](const char* v, int p) {
        if (p == 0) return;
        if (!s.empty()) s += "*";
        s += v;
        if (p > 1) s += "^" + std::to_string(p);
    };
    add("x", m.a);
    add("y", m.b);
    add("t", m.c);
    return s.empty() ? "1" : s;
}

/// Mean/standard-deviation scaling of the observation coordinates.
inline CoordinateScaling computeScaling(const PressureObservations& obs)
{
    require(!obs.records.empty(), "scaling: no observations");
    const double n = static_cast<double>(obs.records.size());
    CoordinateScaling s{};
    double mx = 0, my = 0, mt = 0;
    for (const auto& r : obs.records) {
        mx += r.x;
        my += r.y;
        mt += r.time;
    }
    s.cx = mx / n;
    s.cy = my / n;
    s.ct = mt / n;
    double vx = 0, vy = 0, vt = 0;
    for (const auto& r : obs.records) {
        vx += (r.x - s.cx) * (r.x - s.cx);
        vy += (r.y - s.cy) * (r.y - s.cy);
        vt += (r.time - s.ct) * (r.time - s.ct);
    }
    auto sd = [n](double v) { return v > 0.0 ? std::sqrt(v / n) : 1.0; };
    s.sx = sd(vx);
    s.sy = sd(vy);
    s.st = sd(vt);
    return s;
}

inline DesignFunction makeDesign(const DesignSpec& spec, const CoordinateScaling& sc)
{
    const std::vector<Monomial> terms = designTerms(spec);
    return [terms, sc](double x, double y, double t) {
        const double u = (x - sc.cx) / sc.sx;
        const double v = (y - sc.cy) / sc.sy;
        const double w = (t - sc.ct) / sc.st;
        Eigen::VectorXd f(static_cast<Eigen::Index>(terms.size()));
        for (std::size_t j = 0; j < terms.size(); ++j) {
            const Monomial& m = terms[j];
            f(static_cast<Eigen::Index>(j)) = std::pow(u, m.a) * std::pow(v, m.b) * std::pow(w, m.c);
        }
        return f;
    };
}

struct TrendFit {
    DesignSpec spec;
    CoordinateScaling scaling;
    std::vector<std::string> columns;
    Eigen::VectorXd beta;
    Eigen::VectorXd residuals;
    double sigma2 = 0.0;
    long nObs = 0;

    PressureModel model() const { return PressureModel(TrendMean{makeDesign(spec, scaling), beta}, sigma2); }
};

/// Ordinary least squares of pressure on the polynomial design; sigma2 is
/// RSS / (n - p). Rank deficiency names the columns that are linear
/// combinations of the others.
inline TrendFit fitPressureTrend(const PressureObservations& obs, const DesignSpec& spec,
                                 const CoordinateScaling& scaling)
{
    const auto terms = designTerms(spec);
    const auto n = static_cast<Eigen::Index>(obs.records.size());
    const auto p = static_cast<Eigen::Index>(terms.size());
    if (n <= p) {
        throw InputError("fitPressureTrend: " + std::to_string(n) + " observations for " + std::to_string(p) +
                         " design columns");
    }
    const DesignFunction design = makeDesign(spec, scaling);
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd z(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& rec = obs.records[static_cast<std::size_t>(r)];
        X.row(r) = design(rec.x, rec.y, rec.time).transpose();
        z(r) = rec.pressure;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
        std::string names;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index j = qr.rank(); j < p; ++j) {
            names += (names.empty() ? "" : ", ") + termName(terms[static_cast<std::size_t>(perm(j))]);
        }
        throw InputError("fitPressureTrend: design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                         " of " + std::to_string(p) + "); collinear columns: " + names);
    }

    TrendFit fit;
    fit.spec = spec;
    fit.scaling = scaling;
    for (const auto& t : terms) fit.columns.push_back(termName(t));
    fit.beta = qr.solve(z);
    fit.residuals = z - X * fit.beta;
    fit.nObs = n;
    fit.sigma2 = fit.residuals.squaredNorm() / static_cast<double>(n - p);
    return fit;
}

inline TrendFit fitPressureTrend(const PressureObservations& obs, const DesignSpec& spec = {})
{
    return fitPressureTrend(obs, spec, computeScaling(obs));
}

}  // namespace rscox::io
