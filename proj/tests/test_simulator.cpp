#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cbi/empirical.hpp"
#include "cbi/immigration.hpp"
#include "cbi/lambda_grid.hpp"
#include "cbi/simulator.hpp"
#include "cbi/stats.hpp"

using namespace cbi;

namespace {

SimConfig unit_config(JumpDensity density, std::uint64_t seed) {
    SimConfig cfg;
    cfg.imm = ImmigrationSpec{1.0, std::move(density)};
    cfg.seed = seed;
    cfg.x0 = 1.0;
    cfg.burn_in = 1000;
    return cfg;
}

std::vector<double> laplace_terms(const std::vector<double>& draws, double lambda) {
    std::vector<double> out(draws.size());
    std::transform(draws.begin(), draws.end(), out.begin(), [&](double x) { return std::exp(-lambda * x); });
    return out;
}

std::vector<double> path_without_origin(const PathSample& p) {
    const auto& v = p.series.values();
    return {v.begin() + 1, v.end()};
}

double sup_gap(const std::vector<double>& values, std::size_t n, const SimConfig& cfg, const LambdaGrid& lg) {
    const ObservationSeries prefix(std::vector<double>(values.begin(), values.begin() + static_cast<long>(n) + 1));
    double gap = 0.0;
    for (double l : lg.nodes()) {
        gap = std::max(gap, std::abs(empirical_laplace(prefix, l) - stationary_laplace(cfg.mech, cfg.imm, l)));
    }
    return gap;
}

}  // namespace

TEST(SimulatePath, AbsorbingZero) {
    SimConfig cfg;
    cfg.imm = ImmigrationSpec{0.0, NoJumps{}};
    cfg.seed = 3;
    for (Scheme s : {Scheme::exact_cir_jumps, Scheme::euler}) {
        cfg.scheme = s;
        const auto p = simulate_path(cfg, 200);
        EXPECT_EQ(p.series.values(), std::vector<double>(201, 0.0));
        EXPECT_EQ(p.jumps_emitted, 0);
        EXPECT_EQ(p.scheme_used, s);
    }
}

TEST(SimulatePath, CirStationaryMean) {
    const auto cfg = unit_config(NoJumps{}, 11);
    const auto x = path_without_origin(simulate_path(cfg, 100000));
    EXPECT_LE(std::abs(stats::mean(x) - 1.0), 3.0 * stats::batch_means_se(x));
}

TEST(SimulatePath, ExponentialJumpsStationaryMean) {
    const auto cfg = unit_config(ExponentialJumps{1.0, 1.0}, 12);
    const auto x = path_without_origin(simulate_path(cfg, 100000));
    EXPECT_LE(std::abs(stats::mean(x) - 2.0), 3.0 * stats::batch_means_se(x));
}

TEST(SimulatePath, MeanMatchesDerivativeOfStationaryTransform) {
    const auto cfg = unit_config(ExponentialJumps{1.0, 1.0}, 12);
    const double h = 1e-5;
    const double slope = (stationary_laplace(cfg.mech, cfg.imm, h) - 1.0) / h;
    EXPECT_NEAR(-slope, 2.0, 1e-3);
}

TEST(SimulatePath, DeterministicPerScheme) {
    for (Scheme s : {Scheme::exact_cir_jumps, Scheme::euler}) {
        auto cfg = unit_config(ExponentialJumps{1.0, 1.0}, 99);
        cfg.scheme = s;
        const auto a = simulate_path(cfg, 500);
        const auto b = simulate_path(cfg, 500);
        EXPECT_EQ(a.series.values(), b.series.values());
        EXPECT_EQ(a.jumps_emitted, b.jumps_emitted);
        cfg.seed = 100;
        EXPECT_NE(simulate_path(cfg, 500).series.values(), a.series.values());
    }
}

TEST(SimulatePath, NonnegativeUnderBothSchemes) {
    for (Scheme s : {Scheme::exact_cir_jumps, Scheme::euler}) {
        // strong diffusion relative to drift forces frequent visits near zero
        SimConfig cfg;
        cfg.mech = BranchingMechanism{1.0, 4.0};
        cfg.imm = ImmigrationSpec{0.2, ExponentialJumps{0.5, 2.0}};
        cfg.scheme = s;
        cfg.seed = 5;
        const auto p = simulate_path(cfg, 20000);
        EXPECT_TRUE(std::all_of(p.series.values().begin(), p.series.values().end(), [](double v) { return v >= 0.0; }));
    }
}

TEST(SimulatePath, JumpCountMatchesTruncatedRate) {
    auto cfg = unit_config(GammaJumps{1.0, 1.0}, 21);
    cfg.small_jump_cutoff = 1e-3;
    const std::size_t n = 50000;
    const auto p = simulate_path(cfg, n);
    const double rate = JumpSampler(cfg.imm.density, cfg.small_jump_cutoff).rate();
    EXPECT_NEAR(rate, detail::e1(1e-3), 1e-10);
    const double per_unit = static_cast<double>(p.jumps_emitted) / static_cast<double>(n);
    EXPECT_LE(std::abs(per_unit - rate), 3.0 * std::sqrt(rate / static_cast<double>(n)));
}

TEST(SimulatePath, InfiniteRateNeedsCutoff) {
    const auto cfg = unit_config(GammaJumps{1.0, 1.0}, 1);
    EXPECT_THROW(simulate_path(cfg, 10), ConfigError);
}

TEST(SimulatePath, ConfigurationErrors) {
    auto cfg = unit_config(NoJumps{}, 1);
    EXPECT_THROW(simulate_path(cfg, 0), ConfigError);
    cfg.x0 = -1.0;
    EXPECT_THROW(simulate_path(cfg, 5), ConfigError);
    cfg.x0 = 1.0;
    cfg.burn_in = -1;
    EXPECT_THROW(simulate_path(cfg, 5), ConfigError);
    cfg.burn_in = 0;
    cfg.scheme = Scheme::euler;
    cfg.substeps = 0;
    EXPECT_THROW(simulate_path(cfg, 5), ConfigError);
    cfg.substeps = 10;
    EXPECT_FALSE(simulate_path(cfg, 5).warnings.empty());
    EXPECT_THROW(parse_scheme("milstein"), ConfigError);
}

TEST(SimulatePath, GriddedJumpSizesFollowCellMasses) {
    const auto grid = CellGrid::dyadic(-1, 1, 1);
    const GriddedDensity k(grid, {2.0, 0.5});
    const JumpDensity density(k);
    const JumpSampler sampler(density, 0.0);
    EXPECT_NEAR(sampler.rate(), 2.0 * 0.5 + 0.5 * 1.0, 1e-14);
    SplitMix64 rng(8);
    const int draws = 100000;
    int first = 0;
    for (int i = 0; i < draws; ++i) {
        const double z = sampler.sample(rng);
        ASSERT_GT(z, 0.5);
        ASSERT_LE(z, 2.0);
        first += z <= 1.0 ? 1 : 0;
    }
    const double p = 1.0 / 1.5;
    EXPECT_LE(std::abs(first / static_cast<double>(draws) - p), 3.0 * std::sqrt(p * (1 - p) / draws));
}

TEST(OneStep, AbsorbingZero) {
    SimConfig cfg;
    cfg.imm = ImmigrationSpec{0.0, NoJumps{}};
    EXPECT_EQ(one_step_samples(cfg, 0.0, 100), std::vector<double>(100, 0.0));
    EXPECT_THROW(one_step_samples(cfg, -1.0, 1), DomainError);
}

TEST(OneStep, TransitionLaplaceMonteCarlo) {
    for (bool jumps : {false, true}) {
        auto cfg = unit_config(jumps ? JumpDensity(ExponentialJumps{1.0, 1.0}) : JumpDensity(NoJumps{}), 31);
        const auto draws = one_step_samples(cfg, 1.0, 100000);
        for (double l : {0.5, 1.0, 2.0}) {
            const auto e = laplace_terms(draws, l);
            EXPECT_LE(std::abs(stats::mean(e) - transition_laplace(cfg.mech, cfg.imm, 1.0, 1.0, l)),
                      3.0 * stats::iid_se(e))
                << "jumps=" << jumps << " lambda=" << l;
        }
    }
}

TEST(OneStep, EulerAgreesWithExactScheme) {
    auto exact = unit_config(ExponentialJumps{1.0, 1.0}, 41);
    auto euler = exact;
    euler.scheme = Scheme::euler;
    euler.seed = 42;
    const auto a = one_step_samples(exact, 1.0, 100000);
    const auto b = one_step_samples(euler, 1.0, 100000);
    for (double l : {0.5, 1.0}) {
        const auto ea = laplace_terms(a, l);
        const auto eb = laplace_terms(b, l);
        const double se = std::hypot(stats::iid_se(ea), stats::iid_se(eb));
        EXPECT_LE(std::abs(stats::mean(ea) - stats::mean(eb)), 3.0 * se) << "lambda=" << l;
    }
}

TEST(Ergodic, SupGapShrinksWithPathLength) {
    const auto cfg = unit_config(ExponentialJumps{1.0, 1.0}, 51);
    const auto lg = LambdaGrid::trapezoid(64, 2.0);
    const auto values = simulate_path(cfg, 100000).series.values();
    const double g3 = sup_gap(values, 1000, cfg, lg);
    const double g5 = sup_gap(values, 100000, cfg, lg);
    EXPECT_LT(g5, g3);
    EXPECT_LT(g5, 0.02);
}
