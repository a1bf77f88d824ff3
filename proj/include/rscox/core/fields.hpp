#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <variant>

#include <Eigen/Dense>

#include "rscox/core/error.hpp"
#include "rscox/core/grid.hpp"

namespace rscox {

/// Cells in rows, epochs k = 0..nSteps in columns.
using FieldMatrix = Eigen::MatrixXd;
using CountMatrix = Eigen::MatrixXi;

/// Gas extracted per cell over the year preceding each epoch, in Nbcm.
struct CovariateField {
    FieldMatrix values;
};

/// Earthquake counts per cell and interval; column 0 is always zero.
struct CountsField {
    CountMatrix values;

    long total() const { return values.cast<long>().sum(); }
};

/// A realization e(s_i, t_k) of the pressure noise, in bara.
struct NoiseField {
    FieldMatrix values;
};

inline void checkShape(const SpaceTimeGrid& grid, Eigen::Index rows, Eigen::Index cols, const char* what)
{
    if (rows != static_cast<Eigen::Index>(grid.nCells()) || cols != grid.nTimes()) {
        throw InputError(std::string(what) + ": expected " + std::to_string(grid.nCells()) + "x" +
                         std::to_string(grid.nTimes()) + ", got " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    }
}

inline void validate(const CovariateField& v, const SpaceTimeGrid& grid)
{
    checkShape(grid, v.values.rows(), v.values.cols(), "covariates");
    require(v.values.allFinite(), "covariates: non-finite value");
}

inline void validate(const CountsField& n, const SpaceTimeGrid& grid)
{
    checkShape(grid, n.values.rows(), n.values.cols(), "counts");
    require((n.values.array() >= 0).all(), "counts: negative value");
}

inline void validate(const NoiseField& e, const SpaceTimeGrid& grid)
{
    checkShape(grid, e.values.rows(), e.values.cols(), "noise");
    require(e.values.allFinite(), "noise: non-finite value");
}

/// Feature vector c(s, t) evaluated at field coordinates and calendar time.
using DesignFunction = std::function<Eigen::VectorXd(double x, double y, double t)>;

/// Linear trend m(s,t) = c(s,t)^T beta.
struct TrendMean {
    DesignFunction design;
    Eigen::VectorXd beta;
};

/// Mean pressure given per cell (rows, grid order) and epoch (columns).
/// May carry more columns than the grid has epochs, e.g. for forecasting.
struct TabulatedMean {
    FieldMatrix table;
};

/// Pressure X = m + E with E i.i.d. mean-zero, variance noiseVar (bara^2).
struct PressureModel {
    std::variant<TrendMean, TabulatedMean> mean;
    double noiseVar = 0.0;

    PressureModel(std::variant<TrendMean, TabulatedMean> m, double sigma2) : mean(std::move(m)), noiseVar(sigma2)
    {
        require(noiseVar >= 0.0 && std::isfinite(noiseVar), "pressure model: noise variance must be >= 0");
    }
};

/// Mean pressure of cell i at epoch k (k may exceed nSteps for forecasts).
inline double evalMeanAt(const PressureModel& pm, const SpaceTimeGrid& grid, std::size_t i, int k)
{
    double value = 0.0;
    if (const auto* trend = std::get_if<TrendMean>(&pm.mean)) {
        const Cell& c = grid.cell(i);
        const Eigen::VectorXd features = trend->design(c.x, c.y, grid.time(k));
        if (features.size() != trend->beta.size()) {
            throw InputError("pressure model: design has " + std::to_string(features.size()) +
                             " features but beta has " + std::to_string(trend->beta.size()));
        }
        value = features.dot(trend->beta);
    } else {
        const auto& tab = std::get<TabulatedMean>(pm.mean).table;
        if (static_cast<Eigen::Index>(i) >= tab.rows() || k >= tab.cols() || k < 0) {
            throw InputError("pressure model: no tabulated mean for cell " + std::to_string(grid.cell(i).id) +
                             " at epoch " + std::to_string(k));
        }
        value = tab(static_cast<Eigen::Index>(i), k);
    }
    if (!std::isfinite(value)) {
        throw NumericError("pressure model: non-finite mean at cell " + std::to_string(grid.cell(i).id) +
                           " epoch " + std::to_string(k));
    }
    return value;
}

/// Mean pressure matrix m(s_i, t_k) over the grid's epochs, in bara.
inline FieldMatrix evalMean(const PressureModel& pm, const SpaceTimeGrid& grid)
{
    FieldMatrix out(static_cast<Eigen::Index>(grid.nCells()), grid.nTimes());
    for (std::size_t i = 0; i < grid.nCells(); ++i) {
        for (int k = 0; k < grid.nTimes(); ++k) {
            out(static_cast<Eigen::Index>(i), k) = evalMeanAt(pm, grid, i, k);
        }
    }
    return out;
}

}  // namespace rscox
