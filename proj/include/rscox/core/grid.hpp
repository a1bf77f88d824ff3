#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rscox/core/error.hpp"

namespace rscox {

struct Cell {
    long id = 0;
    double x = 0.0;     // field units
    double y = 0.0;
    double area = 1.0;  // km^2
};

/// Spatial cells plus a uniform time axis t_k = tOrigin + k * step, k = 0..nSteps.
///
/// Cell order is the canonical iteration order used by every field and
/// every loop over the grid. Counts and covariates live on the intervals
/// (t_{k-1}, t_k], so time index 0 carries no events.
class SpaceTimeGrid {
public:
    SpaceTimeGrid(std::vector<Cell> cells, double tOrigin, double step, int nSteps)
        : cells_(std::move(cells)), tOrigin_(tOrigin), step_(step), nSteps_(nSteps)
    {
        require(nSteps_ >= 1, "grid: nSteps must be >= 1");
        require(step_ > 0.0 && std::isfinite(step_), "grid: step must be positive");
        require(!cells_.empty(), "grid: no cells");
        std::unordered_set<long> seen;
        for (const auto& c : cells_) {
            require(c.area > 0.0 && std::isfinite(c.area),
                    "grid: cell " + std::to_string(c.id) + " has non-positive area");
            require(seen.insert(c.id).second, "grid: duplicate cell id " + std::to_string(c.id));
        }
    }

    std::size_t nCells() const { return cells_.size(); }
    int nSteps() const { return nSteps_; }
    /// Number of epochs, nSteps + 1.
    int nTimes() const { return nSteps_ + 1; }
    double step() const { return step_; }
    double tOrigin() const { return tOrigin_; }
    double time(int k) const { return tOrigin_ + k * step_; }

    const Cell& cell(std::size_t i) const { return cells_[i]; }
    const std::vector<Cell>& cells() const { return cells_; }

    /// Space-time volume Delta(s_i) * Delta of one count interval.
    double exposure(std::size_t i) const { return cells_[i].area * step_; }

    double totalArea() const
    {
        double a = 0.0;
        for (const auto& c : cells_) a += c.area;
        return a;
    }

    /// Returns the cell index containing id, or -1.
    long indexOf(long id) const
    {
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            if (cells_[i].id == id) return static_cast<long>(i);
        }
        return -1;
    }

private:
    std::vector<Cell> cells_;
    double tOrigin_;
    double step_;
    int nSteps_;
};

inline SpaceTimeGrid buildGrid(std::vector<Cell> cells, double tOrigin, double step, int nSteps)
{
    return SpaceTimeGrid(std::move(cells), tOrigin, step, nSteps);
}

/// Planar polygon given as a closed or open ring of vertices.
struct Polygon {
    std::vector<std::pair<double, double>> ring;

    bool contains(double x, double y) const
    {
        bool inside = false;
        const std::size_t n = ring.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            const auto [xi, yi] = ring[i];
            const auto [xj, yj] = ring[j];
            if (((yi > y) != (yj > y)) && (x < (xj - xi) * (y - yi) / (yj - yi) + xi)) {
                inside = !inside;
            }
        }
        return inside;
    }
};

struct RectGridSpec {
    double xMin = 0.0, xMax = 1.0, yMin = 0.0, yMax = 1.0;
    int nx = 1, ny = 1;
    /// Kilometres per field coordinate unit.
    double unitKm = 1.0;
    /// Sub-samples per axis used to estimate the masked fraction of a cell.
    int maskResolution = 10;
};

/// Rectangular nx-by-ny grid over a bounding box, row-major from (xMin, yMin).
///
/// With a mask, each cell's area is scaled by the fraction of its sub-sample
/// points inside the polygon and cells entirely outside are dropped.
inline SpaceTimeGrid buildRectGrid(const RectGridSpec& spec, double tOrigin, double step, int nSteps,
                                   const Polygon* mask = nullptr)
{
    require(spec.nx >= 1 && spec.ny >= 1, "grid: nx and ny must be >= 1");
    require(spec.xMax > spec.xMin && spec.yMax > spec.yMin, "grid: empty bounding box");
    require(spec.unitKm > 0.0, "grid: unitKm must be positive");
    const double dx = (spec.xMax - spec.xMin) / spec.nx;
    const double dy = (spec.yMax - spec.yMin) / spec.ny;
    const double fullArea = dx * spec.unitKm * dy * spec.unitKm;
    const int r = std::max(1, spec.maskResolution);

    std::vector<Cell> cells;
    cells.reserve(static_cast<std::size_t>(spec.nx) * spec.ny);
    for (int iy = 0; iy < spec.ny; ++iy) {
        for (int ix = 0; ix < spec.nx; ++ix) {
            const double x0 = spec.xMin + ix * dx;
            const double y0 = spec.yMin + iy * dy;
            double fraction = 1.0;
            if (mask != nullptr) {
                int hits = 0;
                for (int a = 0; a < r; ++a) {
                    for (int b = 0; b < r; ++b) {
                        if (mask->contains(x0 + (a + 0.5) * dx / r, y0 + (b + 0.5) * dy / r)) ++hits;
                    }
                }
                fraction = static_cast<double>(hits) / (r * r);
            }
            if (fraction <= 0.0) continue;
            cells.push_back(Cell{static_cast<long>(iy) * spec.nx + ix, x0 + 0.5 * dx, y0 + 0.5 * dy,
                                 fullArea * fraction});
        }
    }
    return SpaceTimeGrid(std::move(cells), tOrigin, step, nSteps);
}

}  // namespace rscox
