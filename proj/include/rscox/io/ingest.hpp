#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rscox/core/error.hpp"
#include "rscox/core/fields.hpp"
#include "rscox/core/grid.hpp"
#include "rscox/io/csv.hpp"

namespace rscox::io {

// ---------------------------------------------------------------- dates

/// Days since 1970-01-01 of a proleptic Gregorian date.
inline long daysFromCivil(long y, unsigned m, unsigned d)
{
    y -= m <= 2 ? 1 : 0;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

inline bool isLeapYear(long y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline unsigned daysInMonth(long y, unsigned m)
{
    static constexpr unsigned table[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && isLeapYear(y) ? 29u : table[m - 1];
}

/// Decimal year of an ISO date "YYYY-MM-DD" with optional "THH:MM[:SS]"
/// (or a space separator); Jan 1 00:00 of year Y maps to exactly Y.
inline bool parseIsoDate(const std::string& s, double& out)
{
    int y = 0, mo = 0, d = 0, hh = 0, mm = 0;
    double ss = 0.0;
    int used = 0;
    if (std::sscanf(s.c_str(), "%d-%d-%d%n", &y, &mo, &d, &used) != 3) return false;
    if (mo < 1 || mo > 12 || d < 1 || d > static_cast<int>(daysInMonth(y, static_cast<unsigned>(mo)))) return false;
    const std::string rest = s.substr(static_cast<std::size_t>(used));
    if (!rest.empty()) {
        if (rest[0] != 'T' && rest[0] != ' ') return false;
        int used2 = 0;
        const int got = std::sscanf(rest.c_str() + 1, "%d:%d%n:%lf%n", &hh, &mm, &used2, &ss, &used2);
        if (got < 2) return false;
        std::string tail = rest.substr(1 + static_cast<std::size_t>(used2));
        if (tail == "Z") tail.clear();
        if (!tail.empty() || hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0.0 || ss >= 61.0) return false;
    }
    const long day0 = daysFromCivil(y, 1, 1);
    const double yearDays = isLeapYear(y) ? 366.0 : 365.0;
    const double dayOfYear = static_cast<double>(daysFromCivil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) - day0);
    out = y + (dayOfYear + (hh + (mm + ss / 60.0) / 60.0) / 24.0) / yearDays;
    return true;
}

/// Calendar month as (year, month 1..12).
struct YearMonth {
    int year = 0;
    int month = 1;

    int ordinal() const { return year * 12 + (month - 1); }
    static YearMonth fromOrdinal(int o) { return {o / 12, o % 12 + 1}; }
    double start() const { return year + (month - 1) / 12.0; }
    double end() const { return year + month / 12.0; }
    std::string text() const
    {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
        return buf;
    }
    bool operator<(const YearMonth& o) const { return ordinal() < o.ordinal(); }
};

inline bool parseYearMonth(const std::string& s, YearMonth& out)
{
    int y = 0, m = 0, used = 0;
    if (std::sscanf(s.c_str(), "%d-%d%n", &y, &m, &used) != 2) return false;
    if (static_cast<std::size_t>(used) != s.size() || m < 1 || m > 12) return false;
    out = {y, m};
    return true;
}

// ---------------------------------------------------------------- inputs

struct Event {
    double time = 0.0;  // decimal year
    double x = 0.0;
    double y = 0.0;
    double magnitude = 0.0;
};

struct Catalogue {
    std::vector<Event> events;
};

struct PressureRecord {
    double x = 0.0;
    double y = 0.0;
    double time = 0.0;  // decimal year
    double pressure = 0.0;  // bara
};

struct PressureObservations {
    std::vector<PressureRecord> records;
};

struct ProductionRecord {
    std::string wellId;
    double x = 0.0;
    double y = 0.0;
    YearMonth month;
    double volume = 0.0;  // Nbcm
};

struct ProductionSeries {
    std::vector<ProductionRecord> records;
};

inline double timeField(const CsvTable& t, std::size_t r, int c)
{
    double v = 0.0;
    if (!parseIsoDate(t.text(r, c), v)) t.fail(r, "column '" + t.header[static_cast<std::size_t>(c)] + "': not an ISO date: '" + t.text(r, c) + "'");
    return v;
}

/// catalogue.csv: time (ISO date), x, y, magnitude.
inline Catalogue parseCatalogue(const CsvTable& t)
{
    const int ct = t.column("time"), cx = t.column("x"), cy = t.column("y"), cm = t.column("magnitude");
    Catalogue cat;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        Event e{timeField(t, r, ct), t.number(r, cx), t.number(r, cy), t.number(r, cm)};
        if (!std::isfinite(e.x) || !std::isfinite(e.y) || !std::isfinite(e.magnitude)) t.fail(r, "non-finite value");
        cat.events.push_back(e);
    }
    return cat;
}

/// pressure.csv: x, y, time (ISO date), pressure_bara.
inline PressureObservations parsePressure(const CsvTable& t)
{
    const int cx = t.column("x"), cy = t.column("y"), ct = t.column("time"), cp = t.column("pressure_bara");
    PressureObservations obs;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        PressureRecord p{t.number(r, cx), t.number(r, cy), timeField(t, r, ct), t.number(r, cp)};
        if (!(p.pressure > 0.0) || !std::isfinite(p.pressure)) t.fail(r, "pressure_bara must be positive");
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) t.fail(r, "non-finite coordinate");
        obs.records.push_back(p);
    }
    return obs;
}

/// production.csv: well_id, x, y, month (YYYY-MM), volume_nbcm.
inline ProductionSeries parseProduction(const CsvTable& t)
{
    const int cw = t.column("well_id"), cx = t.column("x"), cy = t.column("y"), cm = t.column("month"),
              cv = t.column("volume_nbcm");
    ProductionSeries prod;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        ProductionRecord p;
        p.wellId = t.text(r, cw);
        if (p.wellId.empty()) t.fail(r, "empty well_id");
        p.x = t.number(r, cx);
        p.y = t.number(r, cy);
        if (!parseYearMonth(t.text(r, cm), p.month)) t.fail(r, "column 'month': expected YYYY-MM, got '" + t.text(r, cm) + "'");
        p.volume = t.number(r, cv);
        if (!(p.volume >= 0.0) || !std::isfinite(p.volume)) t.fail(r, "volume_nbcm must be >= 0");
        prod.records.push_back(p);
    }
    return prod;
}

inline Catalogue readCatalogue(const std::string& path) { return parseCatalogue(readCsv(path)); }
inline PressureObservations readPressure(const std::string& path) { return parsePressure(readCsv(path)); }
inline ProductionSeries readProduction(const std::string& path) { return parseProduction(readCsv(path)); }

/// Polygon ring from a headered x,y CSV.
inline Polygon readPolygon(const std::string& path)
{
    const CsvTable t = readCsv(path);
    const int cx = t.column("x"), cy = t.column("y");
    Polygon p;
    for (std::size_t r = 0; r < t.rows.size(); ++r) p.ring.emplace_back(t.number(r, cx), t.number(r, cy));
    if (p.ring.size() < 3) throw InputError(path + ": polygon needs at least 3 vertices");
    return p;
}

// ---------------------------------------------------------------- binning

/// Maps a planar location to a grid row index, or -1 when outside every cell.
using CellLocator = std::function<long(double x, double y)>;

/// Locator for grids from buildRectGrid: half-open cells [x0, x1) x [y0, y1),
/// with the outer max edges closed; masked-out cells map to -1.
inline CellLocator rectLocator(const RectGridSpec& spec, const SpaceTimeGrid& grid)
{
    std::vector<long> byId(static_cast<std::size_t>(spec.nx) * static_cast<std::size_t>(spec.ny), -1);
    for (std::size_t i = 0; i < grid.nCells(); ++i) {
        const long id = grid.cell(i).id;
        require(id >= 0 && static_cast<std::size_t>(id) < byId.size(), "rectLocator: grid was not built from spec");
        byId[static_cast<std::size_t>(id)] = static_cast<long>(i);
    }
    const double dx = (spec.xMax - spec.xMin) / spec.nx;
    const double dy = (spec.yMax - spec.yMin) / spec.ny;
    return [spec, dx, dy, byId](double x, double y) -> long {
        if (!(x >= spec.xMin && x <= spec.xMax && y >= spec.yMin && y <= spec.yMax)) return -1;
        const int ix = std::min(spec.nx - 1, static_cast<int>(std::floor((x - spec.xMin) / dx)));
        const int iy = std::min(spec.ny - 1, static_cast<int>(std::floor((y - spec.yMin) / dy)));
        return byId[static_cast<std::size_t>(iy) * static_cast<std::size_t>(spec.nx) + static_cast<std::size_t>(ix)];
    };
}

struct BinReport {
    long input = 0;
    long retained = 0;
    long belowMagnitude = 0;
    long outsideSpace = 0;
    long outsideTime = 0;

    long dropped() const { return belowMagnitude + outsideSpace + outsideTime; }
};

/// Counts events with magnitude >= magnitudeMin per (cell, interval
/// (t_{k-1}, t_k]). Events failing the magnitude cut, off-grid, or outside
/// (t_0, t_m] are counted in the report and dropped.
inline CountsField binCatalogue(const Catalogue& cat, const SpaceTimeGrid& grid, const CellLocator& locate,
                                double magnitudeMin, BinReport* report = nullptr)
{
    CountsField out{CountMatrix::Zero(static_cast<Eigen::Index>(grid.nCells()), grid.nTimes())};
    BinReport rep;
    rep.input = static_cast<long>(cat.events.size());
    const double t0 = grid.tOrigin();
    const double tEnd = grid.time(grid.nSteps());
    for (const Event& e : cat.events) {
        if (e.magnitude < magnitudeMin) {
            ++rep.belowMagnitude;
            continue;
        }
        if (!(e.time > t0 && e.time <= tEnd)) {
            ++rep.outsideTime;
            continue;
        }
        const long i = locate(e.x, e.y);
        if (i < 0) {
            ++rep.outsideSpace;
            continue;
        }
        int k = static_cast<int>(std::ceil((e.time - t0) / grid.step()));
        k = std::clamp(k, 1, grid.nSteps());
        ++out.values(i, k);
        ++rep.retained;
    }
    if (report != nullptr) *report = rep;
    return out;
}

// ---------------------------------------------------------------- production

struct SmoothingOptions {
    double bandwidth = 0.0;  // field units; 0 assigns each well to its nearest cell
    double windowYears = 1.0;
};

/// Normalized Gaussian kernel weights of a point over the grid cells.
inline std::vector<double> kernelWeights(const SpaceTimeGrid& grid, double x, double y, double bandwidth)
{
    const std::size_t n = grid.nCells();
    std::vector<double> w(n, 0.0);
    std::vector<double> d2(n);
    std::size_t nearest = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = grid.cell(i).x - x;
        const double dy = grid.cell(i).y - y;
        d2[i] = dx * dx + dy * dy;
        if (d2[i] < d2[nearest]) nearest = i;
    }
    if (!(bandwidth > 0.0)) {
        w[nearest] = 1.0;
        return w;
    }
    // Shift by the nearest distance so the largest weight is exp(0) = 1.
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::exp(-(d2[i] - d2[nearest]) / (2.0 * bandwidth * bandwidth));
        sum += w[i];
    }
    for (auto& v : w) v /= sum;
    return w;
}

/// Months whose span lies in the trailing window (t - window, t].
inline std::vector<YearMonth> monthsInWindow(double t, double window)
{
    std::vector<YearMonth> out;
    const double eps = 1e-9;
    const int first = static_cast<int>(std::floor((t - window) * 12.0 + eps));
    const int last = static_cast<int>(std::floor(t * 12.0 + eps)) - 1;
    for (int o = first; o <= last; ++o) out.push_back(YearMonth::fromOrdinal(o));
    return out;
}

/// Per-cell production over the window preceding each epoch, kernel-smoothed
/// from well locations. Epochs k >= 1 must be fully covered by records (a
/// month is covered when any well reports it); k = 0 uses whatever exists.
inline CovariateField smoothProduction(const ProductionSeries& prod, const SpaceTimeGrid& grid,
                                       const SmoothingOptions& opts)
{
    require(opts.windowYears > 0.0, "smoothProduction: window must be positive");
    require(opts.bandwidth >= 0.0, "smoothProduction: bandwidth must be >= 0");

    std::map<int, std::vector<double>> byMonth;  // month ordinal -> per-cell volume
    std::map<std::string, std::vector<double>> weightCache;
    for (const auto& r : prod.records) {
        const std::string key = r.wellId + "@" + formatDouble(r.x) + "," + formatDouble(r.y);
        auto it = weightCache.find(key);
        if (it == weightCache.end()) it = weightCache.emplace(key, kernelWeights(grid, r.x, r.y, opts.bandwidth)).first;
        auto& cells = byMonth[r.month.ordinal()];
        if (cells.empty()) cells.assign(grid.nCells(), 0.0);
        for (std::size_t i = 0; i < grid.nCells(); ++i) cells[i] += r.volume * it->second[i];
    }

    std::set<int> gaps;
    for (int k = 1; k < grid.nTimes(); ++k) {
        for (const auto& ym : monthsInWindow(grid.time(k), opts.windowYears)) {
            if (byMonth.count(ym.ordinal()) == 0) gaps.insert(ym.ordinal());
        }
    }
    if (!gaps.empty()) {
        // Consecutive missing months are listed as ranges, e.g. "1995-01..1998-12".
        std::string list;
        for (auto it = gaps.begin(); it != gaps.end();) {
            const int first = *it;
            int last = first;
            while (++it != gaps.end() && *it == last + 1) last = *it;
            list += (list.empty() ? "" : ", ") + YearMonth::fromOrdinal(first).text();
            if (last != first) list += ".." + YearMonth::fromOrdinal(last).text();
        }
        throw InputError("production: missing months " + list);
    }

    CovariateField out{FieldMatrix::Zero(static_cast<Eigen::Index>(grid.nCells()), grid.nTimes())};
    for (int k = 0; k < grid.nTimes(); ++k) {
        for (const auto& ym : monthsInWindow(grid.time(k), opts.windowYears)) {
            const auto it = byMonth.find(ym.ordinal());
            if (it == byMonth.end()) continue;
            for (std::size_t i = 0; i < grid.nCells(); ++i) out.values(static_cast<Eigen::Index>(i), k) += it->second[i];
        }
    }
    return out;
}

/// Field total over the months in (t - window, t].
inline double productionTotal(const ProductionSeries& prod, double t, double window)
{
    std::set<int> months;
    for (const auto& ym : monthsInWindow(t, window)) months.insert(ym.ordinal());
    double total = 0.0;
    for (const auto& r : prod.records) {
        if (months.count(r.month.ordinal()) != 0) total += r.volume;
    }
    return total;
}

}  // namespace rscox::io
