#pragma once

// Experiment configuration: an INI-style file with sections
//   [mechanism] [immigration] [simulation] [grids] [estimator] [benchmark]
// Every key is optional; defaults reproduce the reference consistency
// experiment (beta = b = c = 1, k(z) = exp(-z)). Unknown keys are rejected.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cbi/constraints.hpp"
#include "cbi/density.hpp"
#include "cbi/errors.hpp"
#include "cbi/fit.hpp"
#include "cbi/format.hpp"
#include "cbi/immigration.hpp"
#include "cbi/jump_density.hpp"
#include "cbi/lambda_grid.hpp"
#include "cbi/mechanism.hpp"
#include "cbi/simulator.hpp"

namespace cbi {

struct GridSpec {
    int z_lo_exponent = -4;
    int z_hi_exponent = 4;
    int cells_per_block = 1;
    std::size_t lambda_nodes = 64;
    double lambda_max = 2.0;

    [[nodiscard]] CellGrid cell_grid() const { return CellGrid::dyadic(z_lo_exponent, z_hi_exponent, cells_per_block); }
    [[nodiscard]] LambdaGrid lambda_grid() const { return LambdaGrid::trapezoid(lambda_nodes, lambda_max); }
};

struct EstimatorSpec {
    ConstraintMode mode = ConstraintMode::monotone;
    double radius = 4.0;
    std::string envelope_csv;  ///< empty: default envelope
    bool fit_g1 = true;
    bool fit_g2 = true;
    bool truth_known = true;
    FitOptions fit;
};

struct BenchmarkSpec {
    std::vector<std::size_t> ladder{500, 2000, 8000};
    std::size_t replicates = 20;
    std::string output_dir;
};

struct ExperimentConfig {
    BranchingMechanism mech{1.0, 1.0};
    ImmigrationSpec imm{1.0, ExponentialJumps{1.0, 1.0}};
    std::string family = "exponential";
    std::string density_csv;
    SimConfig sim;
    std::size_t n = 1000;
    GridSpec grids;
    EstimatorSpec estimator;
    BenchmarkSpec benchmark;

    /// Canonical key = value listing of every resolved setting.
    [[nodiscard]] std::string canonical() const {
        std::ostringstream os;
        os << "mechanism.b=" << fmt17(mech.b()) << "\nmechanism.c=" << fmt17(mech.c())
           << "\nimmigration.beta=" << fmt17(imm.beta) << "\nimmigration.family=" << family;
        if (const auto* e = std::get_if<ExponentialJumps>(&imm.density.family())) {
            os << "\nimmigration.scale=" << fmt17(e->scale) << "\nimmigration.rate=" << fmt17(e->rate);
        } else if (const auto* g = std::get_if<GammaJumps>(&imm.density.family())) {
            os << "\nimmigration.scale=" << fmt17(g->scale) << "\nimmigration.rate=" << fmt17(g->rate);
        } else if (const auto* d = std::get_if<GriddedDensity>(&imm.density.family())) {
            for (std::size_t i = 0; i < d->cells(); ++i) {
                os << "\nimmigration.cell=" << fmt17(d->grid().left(i)) << ',' << fmt17(d->grid().right(i)) << ','
                   << fmt17(d->values()[i]);
            }
        }
        os << "\nsimulation.scheme=" << to_string(sim.scheme) << "\nsimulation.substeps=" << sim.substeps
           << "\nsimulation.small_jump_cutoff=" << fmt17(sim.small_jump_cutoff)
           << "\nsimulation.burn_in=" << sim.burn_in << "\nsimulation.seed=" << sim.seed
           << "\nsimulation.x0=" << fmt17(sim.x0) << "\nsimulation.delta=" << fmt17(sim.delta)
           << "\nsimulation.n=" << n << "\ngrids.z_lo_exponent=" << grids.z_lo_exponent
           << "\ngrids.z_hi_exponent=" << grids.z_hi_exponent << "\ngrids.cells_per_block=" << grids.cells_per_block
           << "\ngrids.lambda_nodes=" << grids.lambda_nodes << "\ngrids.lambda_max=" << fmt17(grids.lambda_max)
           << "\nestimator.mode=" << to_string(estimator.mode) << "\nestimator.radius=" << fmt17(estimator.radius)
           << "\nestimator.envelope_csv=" << estimator.envelope_csv << "\nestimator.fit_g1=" << estimator.fit_g1
           << "\nestimator.fit_g2=" << estimator.fit_g2 << "\nestimator.truth_known=" << estimator.truth_known
           << "\nestimator.tol=" << fmt17(estimator.fit.tol) << "\nestimator.max_iter=" << estimator.fit.max_iter
           << "\nbenchmark.ladder=";
        for (std::size_t i = 0; i < benchmark.ladder.size(); ++i) {
            os << (i ? "," : "") << benchmark.ladder[i];
        }
        os << "\nbenchmark.replicates=" << benchmark.replicates << '\n';
        return os.str();
    }

    [[nodiscard]] std::string hash() const { return hex64(fnv1a64(canonical())); }

    [[nodiscard]] ConstraintSet constraint_set(const CellGrid& grid) const {
        if (estimator.envelope_csv.empty()) {
            return ConstraintSet::with_default_envelope(grid, estimator.radius, estimator.mode);
        }
        auto env = load_density_csv(estimator.envelope_csv);
        if (!(env.grid() == grid)) {
            throw GridMismatchError("envelope '" + estimator.envelope_csv + "' has " + std::to_string(env.cells()) +
                                    " cells on a different grid than [grids] (" + std::to_string(grid.cells()) +
                                    " cells)");
        }
        return {std::move(env), estimator.radius, estimator.mode};
    }
};

namespace detail {

class SectionReader {
public:
    SectionReader(const boost::property_tree::ptree& root, std::string section, std::set<std::string> allowed)
        : section_(std::move(section)) {
        const auto child = root.get_child_optional(section_);
        if (!child) {
            return;
        }
        for (const auto& [key, node] : *child) {
            if (!allowed.count(key)) {
                throw ConfigError("unknown key '" + key + "' in [" + section_ + "]");
            }
            values_[key] = trim(node.data());
        }
    }

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) > 0; }

    [[nodiscard]] std::string text(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : unquote(it->second);
    }

    [[nodiscard]] double real(const std::string& key, double fallback) const {
        return has(key) ? parse_double(values_.at(key)) : fallback;
    }

    [[nodiscard]] long integer(const std::string& key, long fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const double v = parse_double(values_.at(key));
        if (v != std::floor(v) || std::abs(v) > 9e15) {
            throw ConfigError("[" + section_ + "] " + key + " must be an integer");
        }
        return static_cast<long>(v);
    }

    [[nodiscard]] std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) {
            return fallback;
        }
        try {
            const auto& text = values_.at(key);
            std::size_t used = 0;
            const auto v = std::stoull(text, &used, 0);
            if (used != text.size() || text.find('-') != std::string::npos) {
                throw ConfigError("");
            }
            return v;
        } catch (const std::exception&) {
            throw ConfigError("[" + section_ + "] " + key + " must be an unsigned 64-bit integer");
        }
    }

    [[nodiscard]] bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const auto& v = values_.at(key);
        if (v == "true" || v == "1" || v == "yes") {
            return true;
        }
        if (v == "false" || v == "0" || v == "no") {
            return false;
        }
        throw ConfigError("[" + section_ + "] " + key + " must be true or false");
    }

private:
    static std::string unquote(const std::string& s) {
        if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
            return s.substr(1, s.size() - 2);
        }
        return s;
    }

    std::string section_;
    std::map<std::string, std::string> values_;
};

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& is, const std::string& base_dir = "") {
    boost::property_tree::ptree root;
    try {
        boost::property_tree::read_ini(is, root);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    const std::set<std::string> sections{"mechanism", "immigration", "simulation", "grids", "estimator", "benchmark"};
    for (const auto& [name, node] : root) {
        if (!sections.count(name) || !node.data().empty()) {
            throw ConfigError("unknown section or top-level key '" + name + "'");
        }
    }
    const auto resolve = [&](const std::string& p) {
        return p.empty() || p.front() == '/' || base_dir.empty() ? p : base_dir + "/" + p;
    };

    ExperimentConfig cfg;
    const detail::SectionReader mech(root, "mechanism", {"b", "c"});
    cfg.mech = BranchingMechanism(mech.real("b", 1.0), mech.real("c", 1.0));

    const detail::SectionReader imm(root, "immigration", {"beta", "family", "scale", "rate", "density_csv"});
    cfg.family = imm.text("family", "exponential");
    const double scale = imm.real("scale", 1.0);
    const double rate = imm.real("rate", 1.0);
    JumpDensity density;
    if (cfg.family == "none") {
        density = JumpDensity(NoJumps{});
    } else if (cfg.family == "exponential") {
        density = JumpDensity(ExponentialJumps{scale, rate});
    } else if (cfg.family == "gamma") {
        density = JumpDensity(GammaJumps{scale, rate});
    } else if (cfg.family == "gridded") {
        cfg.density_csv = resolve(imm.text("density_csv", ""));
        if (cfg.density_csv.empty()) {
            throw ConfigError("[immigration] family = gridded needs density_csv");
        }
        density = JumpDensity(load_density_csv(cfg.density_csv));
    } else {
        throw ConfigError("[immigration] family must be none, exponential, gamma or gridded");
    }
    cfg.imm = ImmigrationSpec(imm.real("beta", 1.0), std::move(density));

    const detail::SectionReader sim(
        root, "simulation", {"scheme", "substeps", "small_jump_cutoff", "burn_in", "seed", "x0", "delta", "n"});
    cfg.sim.mech = cfg.mech;
    cfg.sim.imm = cfg.imm;
    cfg.sim.scheme = parse_scheme(sim.text("scheme", "exact-cir-jumps"));
    cfg.sim.substeps = static_cast<int>(sim.integer("substeps", 50));
    const double default_cutoff = cfg.family == "gamma" ? 1e-4 : 0.0;
    cfg.sim.small_jump_cutoff = sim.real("small_jump_cutoff", default_cutoff);
    cfg.sim.burn_in = sim.integer("burn_in", SimConfig::default_burn_in(cfg.mech));
    cfg.sim.seed = sim.seed("seed", 20240611);
    cfg.sim.x0 = sim.real("x0", 1.0);
    cfg.sim.delta = sim.real("delta", 1.0);
    const long n = sim.integer("n", 1000);
    if (n < 1) {
        throw ConfigError("[simulation] n must be >= 1");
    }
    cfg.n = static_cast<std::size_t>(n);

    const detail::SectionReader grids(
        root, "grids", {"z_lo_exponent", "z_hi_exponent", "cells_per_block", "lambda_nodes", "lambda_max"});
    cfg.grids.z_lo_exponent = static_cast<int>(grids.integer("z_lo_exponent", cfg.grids.z_lo_exponent));
    cfg.grids.z_hi_exponent = static_cast<int>(grids.integer("z_hi_exponent", cfg.grids.z_hi_exponent));
    cfg.grids.cells_per_block = static_cast<int>(grids.integer("cells_per_block", cfg.grids.cells_per_block));
    const long nodes = grids.integer("lambda_nodes", static_cast<long>(cfg.grids.lambda_nodes));
    if (nodes < 2) {
        throw ConfigError("[grids] lambda_nodes must be >= 2");
    }
    cfg.grids.lambda_nodes = static_cast<std::size_t>(nodes);
    cfg.grids.lambda_max = grids.real("lambda_max", cfg.grids.lambda_max);
    (void)cfg.grids.cell_grid();
    (void)cfg.grids.lambda_grid();

    const detail::SectionReader est(root, "estimator",
                                    {"mode", "radius", "envelope_csv", "routes", "truth_known", "tol", "max_iter"});
    cfg.estimator.mode = parse_constraint_mode(est.text("mode", "monotone"));
    cfg.estimator.radius = est.real("radius", cfg.estimator.radius);
    cfg.estimator.envelope_csv = resolve(est.text("envelope_csv", ""));
    if (est.has("routes")) {
        cfg.estimator.fit_g1 = cfg.estimator.fit_g2 = false;
        for (const auto& r : split(est.text("routes", ""), ',')) {
            if (r == "g1") {
                cfg.estimator.fit_g1 = true;
            } else if (r == "g2") {
                cfg.estimator.fit_g2 = true;
            } else {
                throw ConfigError("[estimator] routes lists g1 and/or g2, got '" + r + "'");
            }
        }
        if (!cfg.estimator.fit_g1 && !cfg.estimator.fit_g2) {
            throw ConfigError("[estimator] routes must enable at least one route");
        }
    }
    cfg.estimator.truth_known = est.flag("truth_known", true);
    cfg.estimator.fit.tol = est.real("tol", cfg.estimator.fit.tol);
    cfg.estimator.fit.max_iter = static_cast<int>(est.integer("max_iter", cfg.estimator.fit.max_iter));
    if (!(cfg.estimator.fit.tol > 0.0) || cfg.estimator.fit.max_iter < 1) {
        throw ConfigError("[estimator] tol must be > 0 and max_iter >= 1");
    }

    const detail::SectionReader bench(root, "benchmark", {"ladder", "replicates", "output_dir"});
    if (bench.has("ladder")) {
        cfg.benchmark.ladder.clear();
        for (const auto& item : split(bench.text("ladder", ""), ',')) {
            const double v = parse_double(item);
            if (!(v >= 1.0) || v != std::floor(v)) {
                throw ConfigError("[benchmark] ladder entries must be positive integers");
            }
            cfg.benchmark.ladder.push_back(static_cast<std::size_t>(v));
        }
    }
    if (cfg.benchmark.ladder.empty()) {
        throw ConfigError("[benchmark] ladder must not be empty");
    }
    for (std::size_t i = 1; i < cfg.benchmark.ladder.size(); ++i) {
        if (cfg.benchmark.ladder[i] <= cfg.benchmark.ladder[i - 1]) {
            throw ConfigError("[benchmark] ladder must be strictly increasing");
        }
    }
    const long reps = bench.integer("replicates", static_cast<long>(cfg.benchmark.replicates));
    if (reps < 1) {
        throw ConfigError("[benchmark] replicates must be >= 1");
    }
    cfg.benchmark.replicates = static_cast<std::size_t>(reps);
    cfg.benchmark.output_dir = resolve(bench.text("output_dir", ""));
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    const auto slash = path.find_last_of('/');
    return parse_config(in, slash == std::string::npos ? "" : path.substr(0, slash));
}

/// The configuration an empty file resolves to.
inline ExperimentConfig default_config() {
    std::istringstream empty;
    return parse_config(empty);
}

}  // namespace cbi
