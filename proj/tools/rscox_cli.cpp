// rscox command-line tool: simulate, fit, diagnose, monitor, forecast, moments.
//
// Every command reads a key = value run configuration (see README.md), writes
// its outputs into --out, and records wall-clock timings in a separate
// <command>-timings.json so that all other outputs are byte-identical for a
// fixed configuration and seed, whatever the worker count.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>

#include "rscox/io/config.hpp"
#include "rscox/io/csv.hpp"
#include "rscox/io/ingest.hpp"
#include "rscox/io/report.hpp"
#include "rscox/io/trend.hpp"
#include "rscox/rscox.hpp"

using namespace rscox;
using io::Json;
namespace fs = std::filesystem;

namespace {

// ------------------------------------------------------------------ run context

struct Run {
    io::RunConfig cfg;
    fs::path configDir;
    fs::path outDir;
    std::uint64_t seed = 0;
    std::string command;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    std::vector<std::pair<std::string, double>> phases;

    fs::path input(const std::string& key) const
    {
        const fs::path p(cfg.str(key));
        return p.is_absolute() ? p : configDir / p;
    }

    void phase(const std::string& name, std::chrono::steady_clock::time_point since)
    {
        phases.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count());
    }
};

void writeText(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw InputError("write failed for '" + path.string() + "'");
}

void writeJson(const fs::path& path, const Json& j) { writeText(path, j.dump(2) + "\n"); }

Json readJson(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

Json versions()
{
    char eigen[32], boost[32];
    std::snprintf(eigen, sizeof eigen, "%d.%d.%d", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
    std::snprintf(boost, sizeof boost, "%d.%d.%d", BOOST_VERSION / 100000, BOOST_VERSION / 100 % 1000, BOOST_VERSION % 100);
    return Json{{"rscox", kVersion},
                {"eigen", eigen},
                {"boost", boost},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                                      "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                {"cli11", CLI11_VERSION}};
}

/// Report skeleton shared by all commands: command, seed, versions, configuration.
Json reportHeader(const Run& run)
{
    Json cfg = Json::object();
    for (const auto& [k, v] : run.cfg.values()) cfg[k] = v;
    return Json{{"command", run.command}, {"seed", run.seed}, {"versions", versions()}, {"config", cfg}};
}

void writeTimings(const Run& run)
{
    Json phases = Json::object();
    for (const auto& [name, secs] : run.phases) phases[name] = secs;
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - run.start).count();
    writeJson(run.outDir / (run.command + "-timings.json"),
              Json{{"command", run.command}, {"workers", workerCount()}, {"totalSeconds", total}, {"phases", phases}});
}

// ------------------------------------------------------------------ setting

/// Grid, mean pressure, covariates and noise level shared by the model commands.
struct Setting {
    SpaceTimeGrid grid;
    FieldMatrix mean;                 // nTimes columns
    std::vector<double> meanNext;     // mean pressure at t_{m+1}
    CovariateField covariates;        // production over the year preceding t_k
    std::vector<double> productionNext;
    double sigma2 = 0.0;
    PressureModel pressure;           // over nTimes epochs (and beyond for trend models)
    std::optional<ModelParams> truth; // synthetic mode only
    std::optional<CountsField> observed;
    Json provenance;
};

ModelParams paramsFromConfig(const io::RunConfig& cfg, const std::string& prefix)
{
    ModelParams p;
    p.theta1 = cfg.num(prefix + ".theta1");
    p.theta2 = cfg.num(prefix + ".theta2");
    p.alpha = cfg.num(prefix + ".alpha");
    p.logRatio = parseLogRatio(cfg.str(prefix + ".log_ratio", "-inf"));
    p.validate();
    return p;
}

Setting syntheticSetting(const Run& run)
{
    const auto& cfg = run.cfg;
    ScenarioSpec spec;
    spec.nx = static_cast<int>(cfg.integer("scenario.nx", spec.nx));
    spec.ny = static_cast<int>(cfg.integer("scenario.ny", spec.ny));
    spec.nSteps = static_cast<int>(cfg.integer("scenario.steps", spec.nSteps));
    spec.tOrigin = cfg.num("scenario.t0", spec.tOrigin);
    const double sigma = cfg.num("scenario.sigma", std::sqrt(spec.sigma2));
    if (!(sigma >= 0.0)) cfg.fail("scenario.sigma", "must be >= 0");
    spec.sigma2 = sigma * sigma;
    spec.expectedTotal = cfg.num("scenario.expected_total", spec.expectedTotal);
    if (cfg.has("true.theta1")) spec.params = paramsFromConfig(cfg, "true");
    spec.extraSteps = 1;
    const Scenario sc = makeScenario(spec);

    Setting s{sc.grid, sc.mean(), {}, sc.covariates, {}, sc.sigma2, sc.pressureModel(), sc.params, std::nullopt, Json::object()};
    for (std::size_t i = 0; i < sc.grid.nCells(); ++i) {
        s.meanNext.push_back(sc.meanPressure(static_cast<Eigen::Index>(i), sc.grid.nTimes()));
        s.productionNext.push_back(sc.nextCovariate(static_cast<Eigen::Index>(i), 0));
    }
    s.provenance = Json{{"mode", "synthetic"},
                        {"nx", spec.nx},
                        {"ny", spec.ny},
                        {"nSteps", spec.nSteps},
                        {"tOrigin", spec.tOrigin},
                        {"sigma", sigma},
                        {"expectedTotal", spec.expectedTotal},
                        {"trueParams", io::toJson(spec.params)}};
    return s;
}

Setting dataSetting(Run& run)
{
    const auto& cfg = run.cfg;
    RectGridSpec gs;
    gs.xMin = cfg.num("grid.xmin");
    gs.xMax = cfg.num("grid.xmax");
    gs.yMin = cfg.num("grid.ymin");
    gs.yMax = cfg.num("grid.ymax");
    gs.nx = static_cast<int>(cfg.integer("grid.nx"));
    gs.ny = static_cast<int>(cfg.integer("grid.ny"));
    gs.unitKm = cfg.num("grid.unit_km", 1.0);
    gs.maskResolution = static_cast<int>(cfg.integer("grid.mask_resolution", gs.maskResolution));
    const double t0 = cfg.num("time.t0");
    const double step = cfg.num("time.step", 1.0);
    const int nSteps = static_cast<int>(cfg.integer("time.steps"));
    std::optional<Polygon> mask;
    if (cfg.has("data.polygon")) mask = io::readPolygon(run.input("data.polygon").string());
    const SpaceTimeGrid grid = buildRectGrid(gs, t0, step, nSteps, mask ? &*mask : nullptr);

    auto phaseStart = std::chrono::steady_clock::now();
    io::DesignSpec ds;
    ds.spatialOrder = static_cast<int>(cfg.integer("trend.spatial_order", ds.spatialOrder));
    ds.temporalOrder = static_cast<int>(cfg.integer("trend.temporal_order", ds.temporalOrder));
    ds.interactionTimeOrder = static_cast<int>(cfg.integer("trend.interaction_time_order", ds.interactionTimeOrder));
    ds.interactionSpaceOrder = static_cast<int>(cfg.integer("trend.interaction_space_order", ds.interactionSpaceOrder));
    const auto obs = io::readPressure(run.input("data.pressure").string());
    const auto trend = io::fitPressureTrend(obs, ds);
    const PressureModel pm = trend.model();
    run.phase("pressureTrend", phaseStart);

    phaseStart = std::chrono::steady_clock::now();
    const auto prod = io::readProduction(run.input("data.production").string());
    io::SmoothingOptions so;
    so.bandwidth = cfg.num("production.bandwidth", so.bandwidth);
    so.windowYears = cfg.num("production.window", so.windowYears);
    const CovariateField v = io::smoothProduction(prod, grid, so);
    run.phase("production", phaseStart);

    Setting s{grid, evalMean(pm, grid), {}, v, {}, trend.sigma2, pm, std::nullopt, std::nullopt, Json::object()};
    if (cfg.has("true.theta1")) s.truth = paramsFromConfig(cfg, "true");

    // Forecast epoch: mean from the trend, production over the window ending at
    // forecast.production_end (default t_{m+1}).
    const double tNext = grid.time(grid.nTimes());
    const double prodEnd = cfg.num("forecast.production_end", tNext);
    const SpaceTimeGrid one(grid.cells(), prodEnd - step, step, 1);
    const CovariateField vNext = io::smoothProduction(prod, one, so);
    for (std::size_t i = 0; i < grid.nCells(); ++i) {
        s.meanNext.push_back(evalMeanAt(pm, grid, i, grid.nTimes()));
        s.productionNext.push_back(vNext.values(static_cast<Eigen::Index>(i), 1));
    }

    Json columns = Json::array();
    for (const auto& c : trend.columns) columns.push_back(c);
    Json beta = Json::array();
    for (Eigen::Index i = 0; i < trend.beta.size(); ++i) beta.push_back(io::number(trend.beta(i)));
    s.provenance = Json{
        {"mode", "data"},
        {"grid", Json{{"xmin", gs.xMin}, {"xmax", gs.xMax}, {"ymin", gs.yMin}, {"ymax", gs.yMax}, {"nx", gs.nx}, {"ny", gs.ny},
                      {"unitKm", gs.unitKm}, {"activeCells", grid.nCells()}, {"masked", mask.has_value()}}},
        {"time", Json{{"t0", t0}, {"step", step}, {"nSteps", nSteps}}},
        {"pressureTrend",
         Json{{"observations", trend.nObs},
              {"design", Json{{"spatialOrder", ds.spatialOrder},
                              {"temporalOrder", ds.temporalOrder},
                              {"interactionTimeOrder", ds.interactionTimeOrder},
                              {"interactionSpaceOrder", ds.interactionSpaceOrder},
                              {"columns", columns}}},
              {"scaling", Json{{"cx", trend.scaling.cx}, {"sx", trend.scaling.sx}, {"cy", trend.scaling.cy},
                               {"sy", trend.scaling.sy}, {"ct", trend.scaling.ct}, {"st", trend.scaling.st}}},
              {"beta", beta},
              {"sigma", std::sqrt(trend.sigma2)}}},
        {"production", Json{{"bandwidth", so.bandwidth}, {"windowYears", so.windowYears}, {"forecastWindowEnd", prodEnd},
                            {"forecastTotal", io::productionTotal(prod, prodEnd, so.windowYears)}}},
    };

    if (cfg.has("data.catalogue")) {
        phaseStart = std::chrono::steady_clock::now();
        const auto cat = io::readCatalogue(run.input("data.catalogue").string());
        io::BinReport rep;
        s.observed = io::binCatalogue(cat, grid, io::rectLocator(gs, grid), cfg.num("catalogue.magnitude_min", 1.5), &rep);
        s.provenance["catalogue"] = Json{{"magnitudeMin", cfg.num("catalogue.magnitude_min", 1.5)},
                                         {"input", rep.input},
                                         {"retained", rep.retained},
                                         {"belowMagnitude", rep.belowMagnitude},
                                         {"outsideSpace", rep.outsideSpace},
                                         {"outsideTime", rep.outsideTime}};
        run.phase("catalogue", phaseStart);
    }
    return s;
}

Setting loadSetting(Run& run)
{
    const std::string mode = run.cfg.str("mode", "synthetic");
    if (mode == "synthetic") return syntheticSetting(run);
    if (mode == "data") return dataSetting(run);
    run.cfg.fail("mode", "expected 'synthetic' or 'data', got '" + mode + "'");
    return syntheticSetting(run);  // unreachable
}

// ------------------------------------------------------------------ counts I/O

std::string countsCsv(const CountsField& n, const SpaceTimeGrid& grid)
{
    std::ostringstream os;
    os << "cellId,x,y,k,tStart,tEnd,count\n";
    for (std::size_t i = 0; i < grid.nCells(); ++i) {
        const Cell& c = grid.cell(i);
        for (int k = 1; k <= grid.nSteps(); ++k) {
            os << c.id << ',' << io::formatDouble(c.x) << ',' << io::formatDouble(c.y) << ',' << k << ','
               << io::formatDouble(grid.time(k - 1)) << ',' << io::formatDouble(grid.time(k)) << ','
               << n.values(static_cast<Eigen::Index>(i), k) << '\n';
        }
    }
    return os.str();
}

CountsField readCounts(const fs::path& path, const SpaceTimeGrid& grid)
{
    const auto t = io::readCsv(path.string());
    const int cId = t.column("cellId"), cK = t.column("k"), cN = t.column("count");
    CountsField n{CountMatrix::Zero(static_cast<Eigen::Index>(grid.nCells()), grid.nTimes())};
    CountMatrix seen = CountMatrix::Zero(n.values.rows(), n.values.cols());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const long id = t.integer(r, cId);
        const long row = grid.indexOf(id);
        if (row < 0) t.fail(r, "cellId " + std::to_string(id) + " is not on the grid");
        const long k = t.integer(r, cK);
        if (k < 1 || k > grid.nSteps()) t.fail(r, "k must be in 1.." + std::to_string(grid.nSteps()));
        const long count = t.integer(r, cN);
        if (count < 0) t.fail(r, "count must be >= 0");
        if (seen(row, k)++ != 0) t.fail(r, "duplicate (cellId, k)");
        n.values(row, k) = static_cast<int>(count);
    }
    return n;
}

/// Observed counts: data.counts if configured, else the binned catalogue (data
/// mode), else counts.csv in the output directory (written by `simulate`).
CountsField loadCounts(const Run& run, const Setting& s, Json& report)
{
    if (run.cfg.has("data.counts")) {
        report["countsSource"] = run.cfg.str("data.counts");
        return readCounts(run.input("data.counts"), s.grid);
    }
    if (s.observed) {
        report["countsSource"] = "catalogue";
        return *s.observed;
    }
    const fs::path p = run.outDir / "counts.csv";
    if (!fs::exists(p)) throw InputError("no counts: set data.counts, data.catalogue, or run `simulate` first");
    report["countsSource"] = "counts.csv";
    return readCounts(p, s.grid);
}

/// Model parameters: params.* keys if present, else the estimate in fit.json.
ModelParams loadParams(const Run& run, Json& report)
{
    if (run.cfg.has("params.theta1")) {
        report["paramsSource"] = "config";
        return paramsFromConfig(run.cfg, "params");
    }
    const fs::path p = run.cfg.has("params.fit") ? run.input("params.fit") : run.outDir / "fit.json";
    if (!fs::exists(p)) throw InputError("no parameters: set params.theta1/theta2/alpha or run `fit` first");
    const Json j = readJson(p);
    if (!j.contains("estimate") || !j["estimate"].contains("params")) {
        throw InputError(p.string() + ": missing estimate.params");
    }
    if (!j["estimate"].value("converged", false)) throw InputError(p.string() + ": the fit did not converge");
    report["paramsSource"] = p.filename().string();
    return io::paramsFromJson(j["estimate"]["params"]);
}

MalaConfig malaFromConfig(const Run& run, double sigma2)
{
    const auto& cfg = run.cfg;
    MalaConfig m;
    m.stepSize = cfg.num("monitor.step_size", defaultStepSize(sigma2));
    m.burnIn = static_cast<int>(cfg.integer("monitor.burn_in", m.burnIn));
    m.thin = static_cast<int>(cfg.integer("monitor.thin", m.thin));
    m.nSamples = static_cast<int>(cfg.integer("monitor.samples", m.nSamples));
    m.seed = deriveSeed(run.seed, Stream::Mala, 0);
    m.keepFullSamples = false;
    m.validate();
    return m;
}

Json malaJson(const MalaConfig& m)
{
    return Json{{"stepSize", m.stepSize}, {"burnIn", m.burnIn}, {"thin", m.thin}, {"samples", m.nSamples}, {"seed", m.seed}};
}

// ------------------------------------------------------------------ commands

void cmdSimulate(Run& run)
{
    Setting s = loadSetting(run);
    Json report = reportHeader(run);
    report["setting"] = s.provenance;
    ModelParams params;
    if (s.truth) {
        params = *s.truth;
    } else {
        params = loadParams(run, report);
    }
    const auto t = std::chrono::steady_clock::now();
    const std::uint64_t simSeed = deriveSeed(run.seed, Stream::Replicate, 0);
    const auto sim = simulateCatalogue(s.pressure, s.covariates, params, s.grid, simSeed);
    run.phase("simulate", t);
    writeText(run.outDir / "counts.csv", countsCsv(sim.counts, s.grid));
    report["params"] = io::toJson(params);
    report["simulationSeed"] = simSeed;
    report["totalCount"] = sim.counts.total();
    report["outputs"] = Json::array({"counts.csv"});
    writeJson(run.outDir / "simulate.json", report);
    std::printf("simulated %ld events on %zu cells x %d intervals -> %s\n", sim.counts.total(), s.grid.nCells(),
                s.grid.nSteps(), (run.outDir / "counts.csv").string().c_str());
}

void cmdFit(Run& run)
{
    Setting s = loadSetting(run);
    const auto& cfg = run.cfg;
    Json report = reportHeader(run);
    report["setting"] = s.provenance;
    const CountsField counts = loadCounts(run, s, report);
    if (s.observed && !cfg.has("data.counts")) writeText(run.outDir / "binned-counts.csv", countsCsv(counts, s.grid));

    const std::string mode = cfg.str("fit.mode", "reduced");
    if (mode != "reduced" && mode != "full") cfg.fail("fit.mode", "expected 'reduced' or 'full'");
    NewtonOptions opts;
    opts.reducedMode = mode == "reduced";
    opts.mcSamples = static_cast<int>(cfg.integer("fit.mc_samples", opts.mcSamples));
    opts.tolFactor = cfg.num("fit.tolerance", opts.tolFactor);
    opts.maxIterations = static_cast<int>(cfg.integer("fit.max_iterations", opts.maxIterations));
    opts.mcSeed = deriveSeed(run.seed, Stream::McPressure, 0);
    const FitInputs in{s.grid, counts, s.covariates, s.mean, s.sigma2};
    ModelParams init = defaultInitial(in, opts.reducedMode);
    if (cfg.has("init.theta1")) init = paramsFromConfig(cfg, "init");

    auto t = std::chrono::steady_clock::now();
    FitResult fit = newtonSolve(in, init, opts);
    run.phase("newton", t);

    Json trace = Json::array();
    for (const auto& r : fit.trace) {
        trace.push_back(Json{{"iteration", r.iteration}, {"params", io::toJson(r.params)}, {"residual", io::number(r.residual)},
                             {"halvings", r.halvings}});
    }
    report["totalCount"] = counts.total();
    report["sigma2"] = s.sigma2;
    report["estimate"] = Json{{"params", io::toJson(fit.zetaHat)},
                              {"mode", mode},
                              {"converged", fit.converged},
                              {"iterations", fit.iterations},
                              {"finalResidual", io::number(fit.finalResidual)},
                              {"message", fit.message},
                              {"initial", io::toJson(init)},
                              {"mcSamples", fit.mcSamples},
                              {"mcSeed", fit.mcSeed},
                              {"trace", trace}};
    if (s.truth) report["trueParams"] = io::toJson(*s.truth);

    if (fit.converged && fit.zetaHat.reduced()) {
        t = std::chrono::steady_clock::now();
        const auto g = godambeMatrix(fit.zetaHat, s.grid, s.mean, s.covariates, s.sigma2);
        run.phase("godambe", t);
        Json se = Json::array();
        for (Eigen::Index i = 0; i < g.sandwich.rows(); ++i) se.push_back(io::number(std::sqrt(g.sandwich(i, i))));
        report["godambe"] = Json{{"parameters", Json::array({"theta1", "theta2", "alpha"})},
                                 {"U", io::toJson(g.u)},
                                 {"SigmaF", io::toJson(g.sigmaF)},
                                 {"sandwich", io::toJson(g.sandwich)},
                                 {"standardErrors", se}};
    } else {
        report["godambe"] = nullptr;
    }

    const int nBoot = static_cast<int>(cfg.integer("fit.bootstrap", 100));
    const double level = cfg.num("fit.level", 0.95);
    if (fit.converged && nBoot > 0) {
        t = std::chrono::steady_clock::now();
        const std::uint64_t bootSeed = deriveSeed(run.seed, Stream::Bootstrap, 0);
        const auto boot = bootstrapCi(fit, s.grid, s.mean, s.covariates, nBoot, level, bootSeed, opts);
        run.phase("bootstrap", t);
        const std::vector<std::string> names{"theta1", "theta2", "alpha", "logRatio"};
        Json cis = Json::object();
        for (std::size_t c = 0; c < boot.cis.size(); ++c) cis[names[c]] = io::toJson(boot.cis[c]);
        report["bootstrap"] = Json{{"replicates", boot.replicates}, {"failures", boot.failures}, {"seed", bootSeed}, {"cis", cis}};
    } else {
        report["bootstrap"] = nullptr;
    }
    report["outputs"] = Json::array({"fit.json"});
    writeJson(run.outDir / "fit.json", report);

    std::printf("%s after %d iterations: theta1=%.6g theta2=%.6g alpha=%.6g logRatio=%s\n",
                fit.converged ? "converged" : "NOT converged", fit.iterations, fit.zetaHat.theta1, fit.zetaHat.theta2,
                fit.zetaHat.alpha, formatLogRatio(fit.zetaHat.logRatio).c_str());
    if (!fit.converged) throw NumericError("fit did not converge: " + fit.message);
}

void cmdDiagnose(Run& run)
{
    Setting s = loadSetting(run);
    const auto& cfg = run.cfg;
    Json report = reportHeader(run);
    const CountsField counts = loadCounts(run, s, report);
    const ModelParams params = loadParams(run, report);
    const int L = static_cast<int>(cfg.integer("diagnose.mc_samples", 1000));
    const int nBins = static_cast<int>(cfg.integer("diagnose.bins", 20));
    const std::string corr = cfg.str("diagnose.correction", "printed");
    if (corr != "printed" && corr != "lognormal") cfg.fail("diagnose.correction", "expected 'printed' or 'lognormal'");

    const auto t = std::chrono::steady_clock::now();
    const std::uint64_t mcSeed = deriveSeed(run.seed, Stream::McPressure, 1);
    const auto samples = drawPressureSamples(s.grid, s.mean, s.sigma2, L, mcSeed);
    const auto r = pearsonResiduals(counts, params, s.grid, s.mean, s.covariates, s.sigma2, samples,
                                    corr == "printed" ? VarianceCorrection::Printed : VarianceCorrection::Lognormal);
    std::vector<double> res, fitted;
    flattenResiduals(r, res, fitted);
    const auto bins = binResiduals(res, fitted, nBins);
    run.phase("residuals", t);

    std::ostringstream os;
    writeBinsCsv(os, bins);
    writeText(run.outDir / "residual-bins.csv", os.str());
    const double mean = pairwiseSum(res, 0.0) / static_cast<double>(res.size());
    std::vector<double> sq(res.size());
    for (std::size_t i = 0; i < res.size(); ++i) sq[i] = (res[i] - mean) * (res[i] - mean);
    const double var = pairwiseSum(sq, 0.0) / static_cast<double>(res.size() - 1);
    int outside = 0;
    for (const auto& b : bins.bins) outside += std::abs(b.avgResidual) > b.twoSigma ? 1 : 0;
    report["params"] = io::toJson(params);
    report["mcSamples"] = L;
    report["mcSeed"] = mcSeed;
    report["correction"] = corr;
    report["residuals"] = Json{{"n", res.size()}, {"mean", mean}, {"variance", var}, {"bins", nBins}, {"binsOutsideTwoSigma", outside}};
    report["outputs"] = Json::array({"residual-bins.csv"});
    writeJson(run.outDir / "diagnose.json", report);
    std::printf("%zu residuals: mean %.4f, variance %.4f; %d of %d bins outside +-2 sigma\n", res.size(), mean, var, outside, nBins);
}

ChainOutput runChains(Run& run, const Setting& s, const CountsField& counts, const ModelParams& params, Json& report)
{
    if (!params.reduced()) throw InputError("monitor: the posterior is implemented for the reduced model (eta = -inf) only");
    const MalaConfig m = malaFromConfig(run, s.sigma2);
    const auto t = std::chrono::steady_clock::now();
    auto chain = runMonitor(counts, s.covariates, params, s.mean, s.sigma2, s.grid, m);
    run.phase("mala", t);
    report["mala"] = malaJson(m);
    report["warnings"] = chain.warnings;
    for (const auto& w : chain.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    return chain;
}

void cmdMonitor(Run& run)
{
    Setting s = loadSetting(run);
    Json report = reportHeader(run);
    const CountsField counts = loadCounts(run, s, report);
    const ModelParams params = loadParams(run, report);
    const auto chain = runChains(run, s, counts, params, report);

    std::ostringstream os;
    os << "cellId,x,y,acceptance,e0Mean,e0Sd,intensityMean,intensitySd\n";
    double accMin = 1.0, accMax = 0.0;
    for (std::size_t i = 0; i < s.grid.nCells(); ++i) {
        const auto& c = chain.cells[i];
        const Cell& cell = s.grid.cell(i);
        os << cell.id << ',' << io::formatDouble(cell.x) << ',' << io::formatDouble(cell.y) << ','
           << io::formatDouble(c.acceptanceRate) << ',' << io::formatDouble(c.postMean[0]) << ','
           << io::formatDouble(c.postSd[0]) << ',' << io::formatDouble(c.intensityMean) << ','
           << io::formatDouble(c.intensitySd) << '\n';
        accMin = std::min(accMin, c.acceptanceRate);
        accMax = std::max(accMax, c.acceptanceRate);
    }
    writeText(run.outDir / "monitor.csv", os.str());
    report["params"] = io::toJson(params);
    report["acceptance"] = Json{{"min", accMin}, {"max", accMax}};
    report["outputs"] = Json::array({"monitor.csv"});
    writeJson(run.outDir / "monitor.json", report);
    std::printf("MALA on %zu cells: acceptance %.3f-%.3f\n", s.grid.nCells(), accMin, accMax);
}

void cmdForecast(Run& run)
{
    Setting s = loadSetting(run);
    Json report = reportHeader(run);
    const CountsField counts = loadCounts(run, s, report);
    const ModelParams params = loadParams(run, report);
    const auto chain = runChains(run, s, counts, params, report);

    const auto t = std::chrono::steady_clock::now();
    const std::uint64_t fSeed = deriveSeed(run.seed, Stream::Forecast, 0);
    const auto fc = forecastIntensity(chain, params, s.sigma2, s.grid, s.mean, s.meanNext, s.productionNext, fSeed);
    run.phase("forecast", t);

    std::ostringstream risk;
    risk << "cellId,x,y,postMeanIntensity,postSdIntensity\n";
    for (std::size_t i = 0; i < s.grid.nCells(); ++i) {
        const Cell& c = s.grid.cell(i);
        risk << c.id << ',' << io::formatDouble(c.x) << ',' << io::formatDouble(c.y) << ','
             << io::formatDouble(fc.intensityMean[i]) << ',' << io::formatDouble(fc.intensitySd[i]) << '\n';
    }
    writeText(run.outDir / "riskmap.csv", risk.str());

    std::ostringstream hist;
    hist << "count,frequency\n";
    const double I = static_cast<double>(fc.totals.size());
    for (const auto& [n, c] : fc.histogram) hist << n << ',' << io::formatDouble(static_cast<double>(c) / I) << '\n';
    writeText(run.outDir / "forecast-hist.csv", hist.str());

    const double level = run.cfg.num("forecast.level", 0.95);
    const auto [lo, hi] = fc.centralInterval(level);
    const double expected = pairwiseSum(fc.intensityMean, 0.0);
    std::vector<double> totals(fc.totals.begin(), fc.totals.end());
    report["params"] = io::toJson(params);
    report["forecastSeed"] = fSeed;
    report["interval"] = Json{{"tStart", s.grid.time(s.grid.nSteps())}, {"tEnd", s.grid.time(s.grid.nTimes())}};
    report["expectedTotal"] = expected;
    report["predictiveMean"] = pairwiseSum(totals, 0.0) / I;
    report["centralInterval"] = Json{{"level", level}, {"lo", lo}, {"hi", hi}};
    report["outputs"] = Json::array({"riskmap.csv", "forecast-hist.csv"});
    writeJson(run.outDir / "forecast.json", report);
    std::printf("forecast for (%g, %g]: expected total %.2f, central %.0f%% interval [%ld, %ld]\n",
                s.grid.time(s.grid.nSteps()), s.grid.time(s.grid.nTimes()), expected, 100 * level, lo, hi);
}

void cmdMoments(Run& run, const std::string& scenario)
{
    const auto& cfg = run.cfg;
    scenarios::MomentFigure fig;
    if (scenario == "fig1") {
        fig = scenarios::figureOne();
    } else if (scenario == "fig2") {
        fig = scenarios::figureTwo();
    } else {
        throw InputError("moments: --scenario must be fig1 or fig2");
    }
    const int n = static_cast<int>(cfg.integer("moments.samples", 500));
    const double level = cfg.num("moments.level", 0.95);
    const auto spec = makeMomentSpec(fig.mean, fig.alpha, fig.gamma0, fig.sigma2, fig.step);
    const std::uint64_t seed = deriveSeed(run.seed, Stream::Replicate, scenario == "fig1" ? 1 : 2);
    const auto t = std::chrono::steady_clock::now();
    const auto rows = compareRateMoments(spec, n, level, seed);
    run.phase("moments", t);

    std::ostringstream mean, var;
    mean << "k,mcMean,ciLo,ciHi,approx,inside\n";
    var << "k,mcVar,ciLo,ciHi,approx,inside\n";
    int meanIn = 0, varIn = 0;
    for (const auto& r : rows) {
        mean << r.k << ',' << io::formatDouble(r.mcMean) << ',' << io::formatDouble(r.meanCi.lo) << ','
             << io::formatDouble(r.meanCi.hi) << ',' << io::formatDouble(r.meanApprox) << ',' << (r.meanInside ? 1 : 0) << '\n';
        var << r.k << ',' << io::formatDouble(r.mcVar) << ',' << io::formatDouble(r.varCi.lo) << ','
            << io::formatDouble(r.varCi.hi) << ',' << io::formatDouble(r.varApprox) << ',' << (r.varInside ? 1 : 0) << '\n';
        meanIn += r.meanInside ? 1 : 0;
        varIn += r.varInside ? 1 : 0;
    }
    const std::string base = "moments-" + scenario;
    writeText(run.outDir / (base + ".csv"), mean.str());
    writeText(run.outDir / (base + "-variance.csv"), var.str());
    Json report = reportHeader(run);
    report["scenario"] = Json{{"name", scenario}, {"alpha", fig.alpha}, {"step", fig.step}, {"gamma0", fig.gamma0}, {"sigma2", fig.sigma2},
                              {"steps", static_cast<int>(fig.mean.size()) - 1}};
    report["samples"] = n;
    report["level"] = level;
    report["mcSeed"] = seed;
    report["inside"] = Json{{"mean", meanIn}, {"variance", varIn}, {"of", rows.size()}};
    report["outputs"] = Json::array({base + ".csv", base + "-variance.csv"});
    writeJson(run.outDir / (base + ".json"), report);
    std::printf("%s: approximation inside the %.0f%% CI for %d/%zu means and %d/%zu variances (n=%d)\n", scenario.c_str(),
                100 * level, meanIn, rows.size(), varIn, rows.size(), n);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Cox rate-and-state seismicity modelling"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    std::string configPath, outDir = ".", scenario;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "simulate a catalogue at the true (or configured) parameters"},
        {"fit", "solve the estimating equations; Godambe matrix and bootstrap CIs"},
        {"diagnose", "binned Pearson residuals at the fitted parameters"},
        {"monitor", "MALA posterior of the pressure noise per cell"},
        {"forecast", "posterior-predictive intensity and counts for the next interval"},
        {"moments", "delta-approximation vs Monte Carlo tables (Figures 1-2 setups)"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", configPath, "run configuration (key = value)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", outDir, "output directory")->capture_default_str();
        sub->add_option("--seed", seed, "master seed (overrides the 'seed' key)");
        sub->add_option("--workers", workers, "worker threads (default: RSCOX_WORKERS or hardware)");
        if (name == "moments") sub->add_option("--scenario", scenario, "fig1 or fig2")->required()->check(CLI::IsMember({"fig1", "fig2"}));
    }
    CLI11_PARSE(app, argc, argv);

    Run run;
    run.command = app.get_subcommands().front()->get_name();
    try {
        if (workers) setWorkerCount(*workers);
        run.cfg = io::RunConfig::load(configPath);
        run.configDir = fs::absolute(configPath).parent_path();
        run.outDir = outDir;
        fs::create_directories(run.outDir);
        run.seed = seed ? *seed : static_cast<std::uint64_t>(run.cfg.integer("seed", 1));

        if (run.command == "simulate") cmdSimulate(run);
        else if (run.command == "fit") cmdFit(run);
        else if (run.command == "diagnose") cmdDiagnose(run);
        else if (run.command == "monitor") cmdMonitor(run);
        else if (run.command == "forecast") cmdForecast(run);
        else cmdMoments(run, scenario);
        writeTimings(run);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "rscox %s: error: %s\n", run.command.c_str(), e.what());
        return 1;
    }
    return 0;
}
