#pragma once

// Orchestration behind the command-line tool: simulate, estimate, validate and
// benchmark. Outputs are deterministic functions of the configuration; wall
// clock measurements go to a separate timings file.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cbi/config.hpp"
#include "cbi/constraints.hpp"
#include "cbi/empirical.hpp"
#include "cbi/errors.hpp"
#include "cbi/fit.hpp"
#include "cbi/format.hpp"
#include "cbi/immigration.hpp"
#include "cbi/metrics.hpp"
#include "cbi/observations.hpp"
#include "cbi/operator.hpp"
#include "cbi/rng.hpp"
#include "cbi/simulator.hpp"
#include "cbi/stats.hpp"

namespace cbi {

using Json = nlohmann::ordered_json;

/// Grids, constraint set and operators shared (read-only) by every fit of an experiment.
struct EstimationSetup {
    CellGrid grid;
    LambdaGrid lgrid;
    ConstraintSet cs;
    OperatorMatrix op1;  ///< horizon infinity, for g1
    OperatorMatrix op2;  ///< horizon delta, for g2
    std::vector<double> g1_truth;  ///< empty unless the truth is known
    std::vector<double> g2_truth;

    static EstimationSetup build(const ExperimentConfig& cfg) {
        auto grid = cfg.grids.cell_grid();
        auto lgrid = cfg.grids.lambda_grid();
        auto cs = cfg.constraint_set(grid);
        auto op1 = assemble_operator(cfg.mech, cfg.imm.beta, grid, lgrid, kInfinity);
        auto op2 = assemble_operator(cfg.mech, cfg.imm.beta, grid, lgrid, cfg.sim.delta);
        std::vector<double> g1;
        std::vector<double> g2;
        if (cfg.estimator.truth_known) {
            for (double l : lgrid.nodes()) {
                g1.push_back(-psi_time_integral(cfg.mech, cfg.imm, kInfinity, l));
                g2.push_back(-psi_time_integral(cfg.mech, cfg.imm, cfg.sim.delta, l));
            }
        }
        return {std::move(grid), std::move(lgrid), std::move(cs), std::move(op1), std::move(op2), std::move(g1),
                std::move(g2)};
    }
};

struct RouteFit {
    std::string route;  ///< "g1" or "g2"
    EstimateReport report;
    std::vector<double> empirical;
    std::optional<double> g_dist2;   ///< ||g_hat - g||_w^2
    std::optional<double> gn_dist2;  ///< ||gn - g||_w^2
    std::optional<double> k_dist;    ///< ||k_hat - k||_mu
};

inline std::vector<RouteFit> estimate_routes(const ObservationSeries& series, const ExperimentConfig& cfg,
                                             const EstimationSetup& setup) {
    std::vector<RouteFit> out;
    const auto run = [&](const std::string& name, std::vector<double> gn, const OperatorMatrix& op,
                         const std::vector<double>& truth) {
        RouteFit r{name, fit(gn, op, setup.cs, cfg.estimator.fit), std::move(gn), {}, {}, {}};
        if (series.is_constant() && !r.report.has_flag("boundary_solution")) {
            r.report.flags.emplace_back("boundary_solution");
        }
        if (!truth.empty()) {
            r.g_dist2 = setup.lgrid.dist2(r.report.g_hat, truth);
            r.gn_dist2 = setup.lgrid.dist2(r.empirical, truth);
            r.k_dist = mu_distance(r.report.density, cfg.imm.density);
        }
        out.push_back(std::move(r));
    };
    if (cfg.estimator.fit_g1) {
        run("g1", empirical_g1(series, setup.lgrid), setup.op1, setup.g1_truth);
    }
    if (cfg.estimator.fit_g2) {
        if (std::abs(series.delta() - cfg.sim.delta) > 1e-12 * cfg.sim.delta) {
            throw ConfigError("series spacing " + fmt17(series.delta()) + " differs from [simulation] delta " +
                              fmt17(cfg.sim.delta));
        }
        run("g2", empirical_g2(series, setup.lgrid, cfg.mech), setup.op2, setup.g2_truth);
    }
    return out;
}

inline Json report_json(const RouteFit& r, const EstimationSetup& setup) {
    Json grid;
    grid["z_breakpoints"] = setup.grid.breakpoints();
    grid["lambda_nodes"] = setup.lgrid.nodes();
    grid["lambda_weights"] = setup.lgrid.weights();
    Json j;
    j["grid"] = grid;
    j["density_values"] = r.report.density.values();
    j["g_hat"] = r.report.g_hat;
    j["objective"] = r.report.objective;
    j["iterations"] = r.report.iterations;
    j["kkt_residual"] = r.report.kkt_residual;
    j["flags"] = r.report.flags;
    if (r.g_dist2) {
        j["norms"] = {{"g_dist_w", std::sqrt(*r.g_dist2)}, {"k_dist_mu", *r.k_dist}};
    }
    return j;
}

// ---------------------------------------------------------------------------
// output locations

/// Name of the environment variable holding the default output root.
inline constexpr const char* kOutputRootEnv = "JCIR_OUTPUT_ROOT";

inline std::filesystem::path resolve_output_dir(const std::string& requested, const std::string& configured,
                                                const std::string& command) {
    std::filesystem::path dir;
    if (!requested.empty()) {
        dir = requested;
    } else if (!configured.empty()) {
        dir = configured;
    } else if (const char* root = std::getenv(kOutputRootEnv); root && *root) {
        dir = std::filesystem::path(root) / command;
    } else {
        dir = std::filesystem::path("out") / command;
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
    }
    return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write '" + path.string() + "'");
    }
    out << text;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// simulate

struct SimulateResult {
    std::filesystem::path series_path;
    std::filesystem::path meta_path;
};

inline SimulateResult cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    const auto cfg = load_config(config_path);
    const auto dir = resolve_output_dir(out_dir, cfg.benchmark.output_dir, "simulate");
    auto path = simulate_path(cfg.sim, cfg.n);
    SimulateResult res{dir / "series.csv", dir / "series.meta.json"};
    {
        std::ofstream out(res.series_path, std::ios::binary);
        write_series_csv(out, path.series);
    }
    Json meta;
    meta["config_hash"] = cfg.hash();
    meta["seed"] = cfg.sim.seed;
    meta["n"] = cfg.n;
    meta["delta"] = cfg.sim.delta;
    meta["scheme"] = to_string(path.scheme_used);
    meta["jumps_emitted"] = path.jumps_emitted;
    meta["warnings"] = path.warnings;
    write_text(res.meta_path, dump(meta));
    return res;
}

// ---------------------------------------------------------------------------
// estimate

inline std::filesystem::path cmd_estimate(const std::string& series_path, const std::string& config_path,
                                          const std::string& out_dir) {
    const auto cfg = load_config(config_path);
    const auto series = load_series_csv(series_path);
    const auto setup = EstimationSetup::build(cfg);
    const auto fits = estimate_routes(series, cfg, setup);

    Json j;
    j["config_hash"] = cfg.hash();
    const std::filesystem::path meta_path = std::filesystem::path(series_path).replace_extension(".meta.json");
    if (std::ifstream meta_in(meta_path); meta_in) {
        try {
            const auto meta = Json::parse(meta_in);
            j["series_seed"] = meta.at("seed");
            j["series_config_hash"] = meta.at("config_hash");
        } catch (const std::exception&) {
            j["series_seed"] = nullptr;
        }
    } else {
        j["series_seed"] = nullptr;
    }
    j["n"] = series.n();
    j["sigma_min"] = setup.op1.sigma_min();
    Json routes;
    for (const auto& f : fits) {
        routes[f.route] = report_json(f, setup);
    }
    j["routes"] = routes;
    const auto dir = resolve_output_dir(out_dir, cfg.benchmark.output_dir, "estimate");
    const auto path = dir / "estimate.json";
    write_text(path, dump(j));
    for (const auto& f : fits) {
        std::ofstream out(dir / ("density_" + f.route + ".csv"), std::ios::binary);
        write_density_csv(out, f.report.density);
    }
    return path;
}

// ---------------------------------------------------------------------------
// validate

enum class Fault { none, perturbed_flow, w_domain };

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ValidateOptions {
    bool quick = false;
    Fault fault = Fault::none;
};

namespace detail {

inline CheckResult run_check(const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
    try {
        auto [ok, detail] = body();
        return {name, ok, detail};
    } catch (const std::exception& e) {
        return {name, false, std::string("error: ") + e.what()};
    }
}

}  // namespace detail

inline std::vector<CheckResult> cmd_validate(const ValidateOptions& opts = {}) {
    std::vector<CheckResult> out;
    const auto flow = [&](const BranchingMechanism& m, double t, double l) {
        const double v = v_flow(m, t, l);
        return opts.fault == Fault::perturbed_flow ? v * (1.0 + 1e-3 * t) : v;
    };
    const std::vector<BranchingMechanism> mechs{{1.0, 1.0}, {0.5, 2.0}, {2.0, 0.0}};
    const int side = opts.quick ? 8 : 20;

    out.push_back(detail::run_check("flow_vs_rk4", [&] {
        double worst = 0.0;
        for (const auto& m : mechs) {
            for (int a = 1; a <= side; ++a) {
                for (int b = 1; b <= side; ++b) {
                    const double t = 0.25 * a;
                    const double l = 0.2 * b;
                    const double ref = v_ode(m, t, l, 1e-3);
                    worst = std::max(worst, std::abs(flow(m, t, l) - ref) / std::abs(ref));
                }
            }
        }
        return std::pair{worst <= 1e-8, "max relative gap " + fmt17(worst)};
    }));

    out.push_back(detail::run_check("flow_semigroup", [&] {
        double worst = 0.0;
        for (const auto& m : mechs) {
            for (int a = 1; a <= side; ++a) {
                for (int b = 1; b <= side; ++b) {
                    const double t = 0.1 * a;
                    const double s = 0.15 * b;
                    const double l = 0.3 * b;
                    const double lhs = flow(m, t + s, l);
                    const double rhs = flow(m, t, flow(m, s, l));
                    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
                }
            }
        }
        return std::pair{worst <= 1e-10, "max relative gap " + fmt17(worst)};
    }));

    const BranchingMechanism unit(1.0, 1.0);
    const ImmigrationSpec cir(1.0, NoJumps{});
    const ImmigrationSpec jumps(1.0, ExponentialJumps{1.0, 1.0});

    out.push_back(detail::run_check("stationary_gamma_law", [&] {
        double worst = 0.0;
        for (int i = 1; i <= 20; ++i) {
            const double l = 0.1 * i;
            worst = std::max(worst, std::abs(stationary_laplace(unit, cir, l) - 1.0 / (1.0 + l)));
        }
        return std::pair{worst <= 1e-6, "max gap " + fmt17(worst)};
    }));

    out.push_back(detail::run_check("ergodicity_integral", [&] {
        const double a = check_ergodicity(unit, jumps, 1.0);
        const double b = psi_time_integral(unit, jumps, kInfinity, 1.0);
        return std::pair{a == b && std::isfinite(a), "value " + fmt17(a)};
    }));

    out.push_back(detail::run_check("transition_monte_carlo", [&] {
        const std::size_t draws = opts.quick ? 20000 : 100000;
        SimConfig sc;
        sc.mech = unit;
        sc.imm = jumps;
        sc.seed = 97;
        const auto xs = one_step_samples(sc, 1.0, draws);
        double worst = 0.0;
        for (double l : {0.5, 1.0, 2.0}) {
            std::vector<double> e(xs.size());
            std::transform(xs.begin(), xs.end(), e.begin(), [l](double x) { return std::exp(-l * x); });
            const double z = (stats::mean(e) - transition_laplace(unit, jumps, 1.0, 1.0, l)) / stats::iid_se(e);
            worst = std::max(worst, std::abs(z));
        }
        return std::pair{worst <= 3.0, "max |z| " + fmt17(worst)};
    }));

    const auto grid = CellGrid::dyadic(-4, 4, 1);
    const auto lgrid = LambdaGrid::trapezoid(64, 2.0);
    out.push_back(detail::run_check("operator_affinity_and_rank", [&] {
        const auto op = assemble_operator(unit, 1.0, grid, lgrid, kInfinity);
        std::vector<double> k1(grid.cells());
        std::vector<double> k2(grid.cells());
        std::vector<double> mix(grid.cells());
        for (std::size_t i = 0; i < grid.cells(); ++i) {
            k1[i] = 1.0 / (1.0 + static_cast<double>(i));
            k2[i] = 0.25 * static_cast<double>(i % 3);
            mix[i] = 0.5 * k1[i] + 0.5 * k2[i];
        }
        const auto g1 = op.apply(k1);
        const auto g2 = op.apply(k2);
        const auto gm = op.apply(mix);
        double worst = 0.0;
        for (std::size_t j = 0; j < gm.size(); ++j) {
            worst = std::max(worst, std::abs(gm[j] - 0.5 * g1[j] - 0.5 * g2[j]));
        }
        return std::pair{worst <= 1e-12 && op.full_column_rank(),
                         "affinity gap " + fmt17(worst) + ", sigma_min " + fmt17(op.sigma_min())};
    }));

    out.push_back(detail::run_check("projection_idempotent", [&] {
        const auto cs = ConstraintSet::with_default_envelope(grid, 4.0, ConstraintMode::bounded_variation);
        std::vector<double> y(grid.cells());
        SplitMix64 rng(5);
        for (double& v : y) {
            v = 3.0 * rng.uniform01() - 0.5;
        }
        const auto p = project_values(y, cs);
        const auto pp = project_values(p, cs);
        double worst = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            worst = std::max(worst, std::abs(p[i] - pp[i]));
        }
        return std::pair{worst <= 1e-9 && cs.contains(p), "idempotence gap " + fmt17(worst)};
    }));

    out.push_back(detail::run_check("martingale_xi", [&] {
        SimConfig sc;
        sc.mech = unit;
        sc.imm = cir;
        sc.seed = 131;
        sc.x0 = 1.0;
        const auto path = simulate_path(sc, opts.quick ? 20000 : 100000);
        const double l = 0.5;
        const auto d = xi_diagnostics(path.series, unit, cir, l);
        const double se_mean = stats::batch_means_se(d.xi);
        std::vector<double> sq(d.xi.size());
        std::transform(d.xi.begin(), d.xi.end(), sq.begin(), [](double x) { return x * x; });
        const double se_var = stats::batch_means_se(sq);
        const double w = asymptotic_variance_W(unit, cir, l);
        const double z_mean = d.mean / se_mean;
        const double z_var = (d.variance - w) / se_var;
        return std::pair{std::abs(z_mean) <= 3.0 && std::abs(z_var) <= 3.0,
                         "z(mean) " + fmt17(z_mean) + ", z(variance) " + fmt17(z_var)};
    }));

    out.push_back(detail::run_check("variance_weight_domain", [&] {
        std::vector<double> nodes = lgrid.nodes();
        if (opts.fault == Fault::w_domain) {
            nodes.push_back(-0.9);  // v(2l) - 2v(l) leaves the stationary flow domain
        }
        double largest = 0.0;
        for (double l : nodes) {
            largest = std::max(largest, asymptotic_variance_W(unit, jumps, l));
        }
        return std::pair{std::isfinite(largest), "max W " + fmt17(largest)};
    }));
    return out;
}

// ---------------------------------------------------------------------------
// benchmark

struct BenchmarkRow {
    std::size_t n = 0;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    double g1_dist2 = NAN;     ///< ||g1_hat - g1||_w^2
    double k1_mu = NAN;        ///< ||k1_hat - k||_mu
    double n_g2_dist2 = NAN;   ///< n ||g2_hat - g2||_w^2
    double g1n_dist2 = NAN;    ///< ||g1n - g1||_w^2
    double g2n_dist2 = NAN;    ///< ||g2n - g2||_w^2
    bool ineq_g1 = false;      ///< ||g_hat - g||^2 <= 4 ||gn - g||^2 on the g1 route
    bool ineq_g2 = false;
    int iterations_g1 = 0;
    int iterations_g2 = 0;
    double runtime = 0.0;      ///< seconds; reported only in the timings file
    std::string status = "ok";
};

struct NSummary {
    std::size_t n = 0;
    std::size_t ok = 0;
    double median_g1_dist2 = NAN;
    double median_k1_mu = NAN;
    double median_n_g2_dist2 = NAN;
    double se_median_n_g2_dist2 = NAN;
    bool ineq_all = true;
};

struct BenchmarkResult {
    std::vector<BenchmarkRow> rows;
    std::vector<NSummary> summary;
    std::optional<double> w_integral;  ///< int W(l) w(l) dl over the weighted grid
    std::string config_hash;
};

inline std::uint64_t replicate_seed(std::uint64_t seed, std::size_t n, std::size_t replicate) {
    return substream_seed(seed, (static_cast<std::uint64_t>(n) << 20) + replicate);
}

inline BenchmarkRow benchmark_row(const ExperimentConfig& cfg, const EstimationSetup& setup, std::size_t n,
                                  std::size_t replicate) {
    const auto start = std::chrono::steady_clock::now();
    BenchmarkRow row;
    row.n = n;
    row.replicate = replicate;
    row.seed = replicate_seed(cfg.sim.seed, n, replicate);
    try {
        SimConfig sc = cfg.sim;
        sc.seed = row.seed;
        const auto path = simulate_path(sc, n);
        ExperimentConfig both = cfg;
        both.estimator.fit_g1 = both.estimator.fit_g2 = true;
        both.estimator.truth_known = true;
        const auto fits = estimate_routes(path.series, both, setup);
        const double tol = cfg.estimator.fit.tol;
        for (const auto& f : fits) {
            const ProjectionInequality pi{*f.g_dist2, *f.gn_dist2};
            if (f.route == "g1") {
                row.g1_dist2 = *f.g_dist2;
                row.k1_mu = *f.k_dist;
                row.g1n_dist2 = *f.gn_dist2;
                row.ineq_g1 = pi.holds(tol);
                row.iterations_g1 = f.report.iterations;
            } else {
                row.n_g2_dist2 = static_cast<double>(n) * *f.g_dist2;
                row.g2n_dist2 = *f.gn_dist2;
                row.ineq_g2 = pi.holds(tol);
                row.iterations_g2 = f.report.iterations;
            }
        }
    } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
    }
    row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return out + "\"";
}

inline constexpr const char* kRowsHeader =
    "config_hash,n,replicate,seed,g1_dist2_w,k1_dist_mu,n_g2_dist2_w,g1n_dist2_w,g2n_dist2_w,"
    "ineq_g1,ineq_g2,iterations_g1,iterations_g2,status";

inline std::string row_csv(const BenchmarkRow& r, const std::string& hash) {
    return hash + "," + std::to_string(r.n) + "," + std::to_string(r.replicate) + "," + std::to_string(r.seed) + "," +
           fmt17(r.g1_dist2) + "," + fmt17(r.k1_mu) + "," + fmt17(r.n_g2_dist2) + "," + fmt17(r.g1n_dist2) + "," +
           fmt17(r.g2n_dist2) + "," + (r.ineq_g1 ? "1" : "0") + "," + (r.ineq_g2 ? "1" : "0") + "," +
           std::to_string(r.iterations_g1) + "," + std::to_string(r.iterations_g2) + "," + csv_field(r.status);
}

/// Per-n medians; a pure function of the rows.
inline std::vector<NSummary> summarize(const std::vector<BenchmarkRow>& rows, const std::vector<std::size_t>& ladder) {
    std::vector<NSummary> out;
    for (std::size_t n : ladder) {
        NSummary s;
        s.n = n;
        std::vector<double> g1;
        std::vector<double> k1;
        std::vector<double> g2;
        for (const auto& r : rows) {
            if (r.n != n || r.status != "ok") {
                continue;
            }
            ++s.ok;
            g1.push_back(r.g1_dist2);
            k1.push_back(r.k1_mu);
            g2.push_back(r.n_g2_dist2);
            s.ineq_all = s.ineq_all && r.ineq_g1 && r.ineq_g2;
        }
        if (!g1.empty()) {
            s.median_g1_dist2 = stats::median(g1);
            s.median_k1_mu = stats::median(k1);
            s.median_n_g2_dist2 = stats::median(g2);
            s.se_median_n_g2_dist2 = g2.size() > 1 ? stats::median_se(g2) : NAN;
        }
        out.push_back(s);
    }
    return out;
}

inline std::optional<double> weighted_w_integral(const ExperimentConfig& cfg, const LambdaGrid& lgrid) {
    try {
        double s = 0.0;
        for (std::size_t j = 0; j < lgrid.size(); ++j) {
            s += lgrid.weights()[j] * asymptotic_variance_W(cfg.mech, cfg.imm, lgrid.nodes()[j], cfg.sim.delta);
        }
        return s;
    } catch (const Error&) {
        return std::nullopt;
    }
}

/// Runs every (n, replicate) cell of the ladder. `on_row` sees rows in ladder
/// order as soon as the prefix up to them is complete.
inline BenchmarkResult run_benchmark(const ExperimentConfig& cfg, unsigned workers,
                                     const std::function<void(const BenchmarkRow&)>& on_row = {}) {
    const auto setup = EstimationSetup::build([&] {
        ExperimentConfig c = cfg;
        c.estimator.truth_known = true;
        return c;
    }());
    std::vector<std::pair<std::size_t, std::size_t>> tasks;
    for (std::size_t n : cfg.benchmark.ladder) {
        for (std::size_t r = 0; r < cfg.benchmark.replicates; ++r) {
            tasks.emplace_back(n, r);
        }
    }
    BenchmarkResult res;
    res.config_hash = cfg.hash();
    res.rows.resize(tasks.size());
    std::vector<bool> done(tasks.size(), false);
    std::size_t emitted = 0;
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) {
                return;
            }
            auto row = benchmark_row(cfg, setup, tasks[t].first, tasks[t].second);
            const std::lock_guard lock(mu);
            res.rows[t] = std::move(row);
            done[t] = true;
            while (emitted < tasks.size() && done[emitted]) {
                if (on_row) {
                    on_row(res.rows[emitted]);
                }
                ++emitted;
            }
        }
    };
    workers = std::max(1u, workers);
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool) {
        th.join();
    }
    res.summary = summarize(res.rows, cfg.benchmark.ladder);
    res.w_integral = weighted_w_integral(cfg, setup.lgrid);
    return res;
}

inline Json summary_json(const BenchmarkResult& res, const ExperimentConfig& cfg) {
    Json j;
    j["config_hash"] = res.config_hash;
    j["seed"] = cfg.sim.seed;
    j["replicates"] = cfg.benchmark.replicates;
    if (res.w_integral) {
        j["w_integral"] = *res.w_integral;
    } else {
        j["w_integral"] = nullptr;
    }
    Json per = Json::array();
    const auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    for (const auto& s : res.summary) {
        per.push_back({{"n", s.n},
                       {"ok", s.ok},
                       {"median_g1_dist2_w", num(s.median_g1_dist2)},
                       {"median_k1_dist_mu", num(s.median_k1_mu)},
                       {"median_n_g2_dist2_w", num(s.median_n_g2_dist2)},
                       {"se_median_n_g2_dist2_w", num(s.se_median_n_g2_dist2)},
                       {"inequality_holds", s.ineq_all}});
    }
    j["per_n"] = per;
    return j;
}

struct BenchmarkFiles {
    std::filesystem::path rows;
    std::filesystem::path summary;
    std::filesystem::path timings;
    bool all_rows_ok = true;
};

inline BenchmarkFiles cmd_benchmark(const std::string& config_path, const std::string& out_dir, unsigned workers) {
    const auto cfg = load_config(config_path);
    const auto dir = resolve_output_dir(out_dir, cfg.benchmark.output_dir, "benchmark");
    BenchmarkFiles files{dir / "rows.csv", dir / "summary.json", dir / "timings.csv", true};
    std::ofstream rows(files.rows, std::ios::binary);
    std::ofstream timings(files.timings, std::ios::binary);
    if (!rows || !timings) {
        throw ConfigError("cannot write benchmark outputs in '" + dir.string() + "'");
    }
    rows << kRowsHeader << '\n';
    timings << "n,replicate,runtime_seconds\n";
    const auto hash = cfg.hash();
    const auto res = run_benchmark(cfg, workers, [&](const BenchmarkRow& r) {
        rows << row_csv(r, hash) << '\n' << std::flush;
        timings << r.n << ',' << r.replicate << ',' << fmt17(r.runtime) << '\n' << std::flush;
    });
    for (const auto& r : res.rows) {
        files.all_rows_ok = files.all_rows_ok && r.status == "ok";
    }
    write_text(files.summary, dump(summary_json(res, cfg)));
    return files;
}

}  // namespace cbi
