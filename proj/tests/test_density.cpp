#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "cbi/constraints.hpp"
#include "cbi/immigration.hpp"
#include "cbi/jump_density.hpp"
#include "cbi/metrics.hpp"
#include "cbi/operator.hpp"
#include "support/oracles.hpp"

using namespace cbi;

namespace {

const BranchingMechanism kUnit{1.0, 1.0};

std::vector<double> random_values(std::mt19937_64& rng, std::size_t m, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(m);
    for (double& x : v) {
        x = u(rng);
    }
    return v;
}

std::vector<double> apply_dense(const OperatorMatrix& op, const std::vector<double>& v) {
    std::vector<double> g(op.lambda_grid().size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        double s = op.offset()(static_cast<Eigen::Index>(j));
        for (std::size_t i = 0; i < v.size(); ++i) {
            s += op.entries()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) * v[i];
        }
        g[j] = -s;
    }
    return g;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

double euclid(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return std::sqrt(s);
}

}  // namespace

TEST(CellGrid, DyadicBlocks) {
    const auto g = CellGrid::dyadic(-2, 2, 3);
    EXPECT_EQ(g.cells(), 12U);
    ASSERT_EQ(g.blocks().size(), 4U);
    EXPECT_EQ(g.blocks()[1], std::make_pair(std::size_t{3}, std::size_t{6}));
    EXPECT_DOUBLE_EQ(g.left(0), 0.25);
    EXPECT_DOUBLE_EQ(g.right(11), 4.0);
    EXPECT_EQ(g.locate(0.25), g.cells());
    EXPECT_EQ(g.locate(4.0), 11U);
    EXPECT_THROW(CellGrid::dyadic(1, 1, 2), ConfigError);
}

TEST(CellGrid, RejectsBadBreakpoints) {
    EXPECT_THROW(CellGrid({1.0, 0.5}), Error);
    EXPECT_THROW(CellGrid({0.0, 1.0}), Error);
    EXPECT_THROW(CellGrid({0.5, 2.0}), ConfigError);
}

TEST(MuNorm, Examples) {
    // (0, 2] and (0, 0.5] approximated by dyadic grids reaching down to 2^-40
    const auto to_two = CellGrid::dyadic(-40, 1, 1);
    const auto to_half = CellGrid::dyadic(-40, -1, 1);
    EXPECT_EQ(mu_norm(GriddedDensity::zero(to_two)), 0.0);
    EXPECT_NEAR(mu_norm(GriddedDensity(to_two, std::vector<double>(to_two.cells(), 1.0))), 1.5, 1e-15);
    EXPECT_NEAR(mu_norm(GriddedDensity(to_half, std::vector<double>(to_half.cells(), 2.0))), 0.25, 1e-15);
}

TEST(MuNorm, MatchesRiemann) {
    const auto g = CellGrid::dyadic(-3, 3, 2);
    std::mt19937_64 rng(3);
    const GriddedDensity k(g, random_values(rng, g.cells(), 0.0, 2.0));
    const double ref = oracle::riemann([&](double z) { return k(z) * std::min(z, 1.0); }, 0.0, 8.0, 4000000);
    EXPECT_NEAR(mu_norm(k), ref, 1e-6);
}

TEST(GriddedDensity, Validation) {
    const auto g = CellGrid::dyadic(0, 1, 2);
    EXPECT_THROW(GriddedDensity(g, {1.0}), GridMismatchError);
    EXPECT_THROW(GriddedDensity(g, {1.0, -0.1}), DomainError);
    const GriddedDensity k(g, {3.0, 1.0});
    EXPECT_EQ(k(1.25), 3.0);
    EXPECT_EQ(k(1.5), 3.0);
    EXPECT_EQ(k(1.5000001), 1.0);
    EXPECT_EQ(k(2.5), 0.0);
}

TEST(DensityCsv, RoundTripAndErrors) {
    const auto g = CellGrid::dyadic(-1, 2, 2);
    std::mt19937_64 rng(1);
    const GriddedDensity k(g, random_values(rng, g.cells(), 0.0, 1.0));
    std::stringstream ss;
    write_density_csv(ss, k);
    const auto back = read_density_csv(ss);
    EXPECT_TRUE(back.grid() == g);
    EXPECT_EQ(back.values(), k.values());

    std::istringstream bad_header("a,b,c\n0.5,1,1\n");
    EXPECT_THROW(read_density_csv(bad_header), ConfigError);
    std::istringstream gap("z_left,z_right,value\n0.5,1,1\n1.5,2,1\n");
    EXPECT_THROW(read_density_csv(gap), ConfigError);
}

TEST(JumpDensity, ExponentialClosedForms) {
    const JumpDensity k(ExponentialJumps{2.0, 1.5});
    EXPECT_NEAR(k.mass(0.5, kInfinity), oracle::riemann([&](double z) { return k(z); }, 0.5, 60.0, 1000000),
                1e-9);
    EXPECT_NEAR(k.mu_norm(), oracle::riemann([&](double z) { return k(z) * std::min(z, 1.0); }, 0.0, 60.0, 2000000),
                1e-8);
    EXPECT_NEAR(k.laplace_exponent(0.8),
                oracle::riemann([&](double z) { return -std::expm1(-0.8 * z) * k(z); }, 0.0, 60.0, 1000000), 1e-9);
}

TEST(JumpDensity, GriddedLaplaceExponentMatchesRiemann) {
    const auto g = CellGrid::dyadic(-2, 2, 2);
    const JumpDensity k(GriddedDensity(g, {3, 2, 2, 1, 1, 0.5, 0.5, 0.1}));
    const double ref = oracle::riemann([&](double z) { return -std::expm1(-1.7 * z) * k(z); }, 0.0, 4.0, 2000000);
    EXPECT_NEAR(k.laplace_exponent(1.7), ref, 1e-9);
}

TEST(Feature, ZeroLambda) { EXPECT_EQ(feature(kUnit, 0.0, 3.0, kInfinity), 0.0); }

TEST(Feature, SmallZLimit) {
    for (const BranchingMechanism m : {kUnit, BranchingMechanism{2.0, 0.5}}) {
        for (double l : {0.5, 2.0}) {
            const double lim = std::log1p(m.c() * l / m.b()) / m.c();
            const double z = 1e-6;
            EXPECT_LE(std::abs(feature(m, l, z, kInfinity) / z - lim) / lim, 1e-4);
        }
    }
}

TEST(Feature, MatchesTimeDomainRiemann) {
    const double ref = oracle::time_domain_riemann(
        1.0, 1.0, 60.0, 1.0, [](double v) { return -std::expm1(-v); }, 1000000);
    EXPECT_NEAR(feature(kUnit, 1.0, 1.0, kInfinity), ref, 1e-6);
    const double ref1 = oracle::time_domain_riemann(
        1.0, 1.0, 1.0, 1.5, [](double v) { return -std::expm1(-2.0 * v); }, 1000000);
    EXPECT_NEAR(feature(kUnit, 1.5, 2.0, 1.0), ref1, 1e-6);
}

TEST(Feature, Bounds) {
    for (double l : {0.1, 1.0, 2.0}) {
        for (double z : {1e-4, 1e-3, 0.1, 1.0, 10.0}) {
            const double f1 = feature(kUnit, l, z, 1.0);
            EXPECT_GE(f1, 0.0);
            EXPECT_LE(f1, 1.0);
            EXPECT_GE(feature(kUnit, l, z, kInfinity), f1);
        }
        for (double z : {1e-4, 1e-3}) {
            const double cap = z * std::log1p(l);
            EXPECT_LE(feature(kUnit, l, z, kInfinity), cap * 1.05);
            EXPECT_GE(feature(kUnit, l, z, kInfinity), cap * 0.95);
        }
    }
}

TEST(Operator, ZeroNodeRowAndDimensions) {
    const auto g = CellGrid::dyadic(-2, 2, 1);
    const auto lg = LambdaGrid::trapezoid(5, 2.0);
    const auto op = assemble_operator(kUnit, 1.0, g, lg, kInfinity);
    EXPECT_EQ(op.entries().rows(), 5);
    EXPECT_EQ(op.entries().cols(), 4);
    EXPECT_EQ(op.entries().row(0).norm(), 0.0);
    EXPECT_EQ(op.offset()(0), 0.0);
    EXPECT_THROW(assemble_operator(kUnit, -1.0, g, lg, 1.0), DomainError);
}

TEST(Operator, StationaryOffsetIsMinusLogTwo) {
    const auto op = assemble_operator(kUnit, 1.0, CellGrid::dyadic(0, 1, 1), LambdaGrid::trapezoid(3, 2.0), kInfinity);
    const auto g = model_g(op, GriddedDensity::zero(op.grid()));
    EXPECT_NEAR(g[1], -std::log(2.0), 1e-14);
    EXPECT_NEAR(g[1], std::log(stationary_laplace(kUnit, ImmigrationSpec{1.0, NoJumps{}}, 1.0)), 1e-12);
}

TEST(Operator, OneCellAffinity) {
    const CellGrid g({1.0, 2.0});
    const auto op = assemble_operator(kUnit, 1.0, g, LambdaGrid::trapezoid(9, 2.0), 1.0);
    const auto g0 = model_g(op, GriddedDensity(g, {0.0}));
    const auto g1 = model_g(op, GriddedDensity(g, {1.0}));
    const auto g2 = model_g(op, GriddedDensity(g, {2.0}));
    for (std::size_t j = 0; j < g0.size(); ++j) {
        const double a = op.entries()(static_cast<Eigen::Index>(j), 0);
        EXPECT_DOUBLE_EQ(g0[j], -op.offset()(static_cast<Eigen::Index>(j)));
        EXPECT_NEAR(g1[j], g0[j] - a, 1e-15);
        EXPECT_NEAR(g2[j], g0[j] - 2.0 * a, 1e-15);
    }
}

TEST(Operator, EntriesMatchCellQuadratureOracle) {
    const auto g = CellGrid::dyadic(-1, 1, 2);
    const auto lg = LambdaGrid::trapezoid(3, 2.0);
    const auto op = assemble_operator(kUnit, 1.0, g, lg, kInfinity);
    for (std::size_t i = 0; i < g.cells(); ++i) {
        const double ref =
            oracle::riemann([&](double z) { return feature(kUnit, 1.0, z, kInfinity); }, g.left(i), g.right(i), 2000);
        EXPECT_NEAR(op.entries()(1, static_cast<Eigen::Index>(i)), ref, 1e-9);
    }
}

TEST(Operator, NonnegativeAndOrdered) {
    const auto g = CellGrid::dyadic(-4, 4, 1);
    const auto op = assemble_operator(kUnit, 1.0, g, LambdaGrid::trapezoid(64, 2.0), kInfinity);
    const auto& a = op.entries();
    for (Eigen::Index j = 0; j < a.rows(); ++j) {
        for (Eigen::Index i = 0; i < a.cols(); ++i) {
            EXPECT_GE(a(j, i), 0.0);
            if (i > 0) {
                EXPECT_GE(a(j, i), a(j, i - 1));
            }
            if (j > 0) {
                EXPECT_GE(a(j, i), a(j - 1, i));
            }
        }
    }
}

TEST(ModelG, ZeroDensityNoDrift) {
    const auto op = assemble_operator(kUnit, 0.0, CellGrid::dyadic(-1, 1, 1), LambdaGrid::trapezoid(8, 2.0), 1.0);
    for (double v : model_g(op, GriddedDensity::zero(op.grid()))) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(ModelG, AffinityAndOrder) {
    const auto g = CellGrid::dyadic(-3, 3, 2);
    const auto op = assemble_operator(kUnit, 1.0, g, LambdaGrid::trapezoid(32, 2.0), kInfinity);
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        const auto v1 = random_values(rng, g.cells(), 0.0, 1.0);
        const auto v2 = random_values(rng, g.cells(), 0.0, 1.0);
        const double alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        std::vector<double> mix(v1.size());
        std::vector<double> upper(v1.size());
        for (std::size_t i = 0; i < mix.size(); ++i) {
            mix[i] = alpha * v1[i] + (1.0 - alpha) * v2[i];
            upper[i] = v1[i] + v2[i];
        }
        const auto g1 = model_g(op, GriddedDensity(g, v1));
        const auto g2 = model_g(op, GriddedDensity(g, v2));
        const auto gm = model_g(op, GriddedDensity(g, mix));
        const auto gu = model_g(op, GriddedDensity(g, upper));
        for (std::size_t j = 0; j < g1.size(); ++j) {
            EXPECT_NEAR(gm[j], alpha * g1[j] + (1.0 - alpha) * g2[j], 1e-14);
            EXPECT_LE(gu[j], g1[j] + 1e-15);
        }
        EXPECT_LE(max_abs_diff(g1, apply_dense(op, v1)), 1e-14);
    }
    EXPECT_THROW(model_g(op, GriddedDensity::zero(CellGrid::dyadic(-3, 3, 1))), GridMismatchError);
}

TEST(ModelG, ExponentialJumpsMatchStationaryIntegral) {
    // 64 cells over (2^-6, 2^6]: five or six geometric cells per dyadic block
    std::vector<double> br;
    for (int e = -6; e < 6; ++e) {
        const int cells = e < -2 ? 6 : 5;
        for (int j = 0; j < cells; ++j) {
            br.push_back(std::exp2(e + static_cast<double>(j) / cells));
        }
    }
    br.push_back(64.0);
    ASSERT_EQ(br.size(), 65U);
    const CellGrid g(br);
    const auto lg = LambdaGrid::trapezoid(3, 2.0);
    const auto op = assemble_operator(kUnit, 1.0, g, lg, kInfinity);
    const JumpDensity k(ExponentialJumps{1.0, 1.0});
    const auto gk = model_g(op, k.discretize(g));
    const double ref = -psi_time_integral(kUnit, ImmigrationSpec{1.0, k}, kInfinity, 1.0);
    EXPECT_NEAR(gk[1], ref, 1e-3);
}

TEST(Operator, FullRankOnDefaultGrids) {
    const auto g = CellGrid::dyadic(-4, 4, 1);
    const auto lg = LambdaGrid::trapezoid(64, 2.0);
    for (double horizon : {1.0, kInfinity}) {
        const auto op = assemble_operator(kUnit, 1.0, g, lg, horizon);
        EXPECT_GT(op.sigma_min(), 1e-12) << horizon;
        EXPECT_TRUE(op.full_column_rank());
    }
}

TEST(Lipschitz, TrivialCases) {
    const auto g = CellGrid::dyadic(-2, 2, 2);
    const auto op = assemble_operator(kUnit, 1.0, g, LambdaGrid::trapezoid(16, 2.0), kInfinity);
    std::mt19937_64 rng(5);
    const GriddedDensity k1(g, random_values(rng, g.cells(), 0.0, 1.0));
    const auto same = lipschitz_check(op, k1, k1);
    EXPECT_EQ(same.curve_dist2, 0.0);
    EXPECT_EQ(same.mu_dist, 0.0);
    std::vector<double> twice(k1.values());
    for (double& v : twice) {
        v *= 2.0;
    }
    const auto s = lipschitz_check(op, k1, GriddedDensity(g, twice));
    const auto ak = apply_dense(op, k1.values());
    const auto off = apply_dense(op, std::vector<double>(g.cells(), 0.0));
    EXPECT_NEAR(s.curve_dist2, op.lambda_grid().dist2(ak, off), 1e-15);
    EXPECT_NEAR(s.mu_dist, mu_norm(k1), 1e-15);
}

TEST(Lipschitz, RatioBoundedAndStableUnderRefinement) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> amp(0.0, 2.0);
    std::uniform_real_distribution<double> rate(0.2, 3.0);
    std::vector<std::pair<JumpDensity, JumpDensity>> pairs;
    for (int p = 0; p < 100; ++p) {
        const double a1 = amp(rng);
        const double r1 = rate(rng);
        const double a2 = amp(rng);
        const double r2 = rate(rng);
        pairs.emplace_back(JumpDensity(ExponentialJumps{a1, r1}), JumpDensity(ExponentialJumps{a2, r2}));
    }
    const auto lg = LambdaGrid::trapezoid(32, 2.0);
    std::vector<double> max_ratio;
    for (int cpb : {2, 4}) {
        const auto g = CellGrid::dyadic(-4, 4, cpb);
        const auto op = assemble_operator(kUnit, 1.0, g, lg, kInfinity);
        const double bound = continuity_bound(op);
        double worst = 0.0;
        for (const auto& [k1, k2] : pairs) {
            const auto s = lipschitz_check(op, k1.discretize(g), k2.discretize(g));
            ASSERT_GT(s.mu_dist, 0.0);
            EXPECT_LE(s.curve_dist2, bound * s.mu_dist * s.mu_dist * (1.0 + 1e-12));
            worst = std::max(worst, s.curve_dist2 / (s.mu_dist * s.mu_dist));
        }
        EXPECT_TRUE(std::isfinite(worst));
        max_ratio.push_back(worst);
    }
    EXPECT_LE(std::abs(max_ratio[0] - max_ratio[1]) / max_ratio[1], 0.05);
}

TEST(Constraints, DefaultEnvelope) {
    const auto g = CellGrid::dyadic(-4, 4, 1);
    const auto env = ConstraintSet::default_envelope(g, 4.0);
    EXPECT_NEAR(mu_norm(env), 4.0, 1e-12);
    EXPECT_TRUE(std::is_sorted(env.values().rbegin(), env.values().rend()));
    EXPECT_THROW(ConstraintSet(env, 3.0, ConstraintMode::monotone), ConfigError);
    EXPECT_THROW(ConstraintSet(env, 0.0, ConstraintMode::monotone), ConfigError);
    EXPECT_THROW(parse_constraint_mode("convex"), ConfigError);
}

TEST(Constraints, Membership) {
    const auto g = CellGrid::dyadic(-1, 1, 2);
    const GriddedDensity env(g, {0.8, 0.8, 0.6, 0.3});
    const ConstraintSet mono(env, 0.78, ConstraintMode::monotone);
    const ConstraintSet bv(env, 0.78, ConstraintMode::bounded_variation);
    for (const auto* cs : {&mono, &bv}) {
        EXPECT_TRUE(cs->contains(GriddedDensity::zero(g)));
        EXPECT_FALSE(cs->contains(std::vector<double>{0.9, 0, 0, 0}));
        EXPECT_FALSE(cs->contains(std::vector<double>{0.1, 0, 0, -0.1}));
    }
    EXPECT_TRUE(mono.contains(std::vector<double>{0.8, 0.5, 0.5, 0}));
    EXPECT_FALSE(mono.contains(std::vector<double>{0.4, 0.5, 0.3, 0}));
    // blocks are cells {0, 1} and {2, 3}; the step between blocks is not charged
    EXPECT_TRUE(bv.contains(std::vector<double>{0.0, 0.78, 0.0, 0.3}));
    EXPECT_FALSE(bv.contains(std::vector<double>{0.0, 0.79, 0.0, 0.3}));
}

TEST(Pav, KnownSolutionsAndTv) {
    EXPECT_EQ(pav_nonincreasing(std::vector<double>{1, 3, 2}), (std::vector<double>{2, 2, 2}));
    EXPECT_EQ(pav_nonincreasing(std::vector<double>{3, 1, 2}), (std::vector<double>{3, 1.5, 1.5}));
    EXPECT_DOUBLE_EQ(total_variation(std::vector<double>{1, 3, 2}), 3.0);
}

TEST(TvBall, MatchesFaceEnumeration) {
    std::mt19937_64 rng(23);
    const auto ball = oracle::tv_ball(4, 0.7);
    for (int rep = 0; rep < 20; ++rep) {
        const auto y = random_values(rng, 4, 10.0, 12.0);
        const Eigen::VectorXd ref =
            oracle::minimize_over_faces(Eigen::MatrixXd::Identity(4, 4), Eigen::Map<const Eigen::VectorXd>(y.data(), 4), ball);
        EXPECT_LE(max_abs_diff(project_tv_ball(y, 0.7), {ref.data(), ref.data() + 4}), 1e-9);
    }
}

TEST(Projection, IdempotentAndNegatives) {
    const auto g = CellGrid::dyadic(-4, 4, 2);
    for (auto mode : {ConstraintMode::monotone, ConstraintMode::bounded_variation}) {
        const auto cs = ConstraintSet::with_default_envelope(g, 4.0, mode);
        std::mt19937_64 rng(31);
        const auto x0 = random_values(rng, g.cells(), -1.0, 2.0);
        const auto p = project_values(x0, cs);
        EXPECT_TRUE(cs.contains(p, 1e-9));
        EXPECT_LE(max_abs_diff(project_values(p, cs), p), 1e-9);
        const auto zero = project_values(std::vector<double>(g.cells(), -1.0), cs);
        for (double v : zero) {
            EXPECT_EQ(v, 0.0);
        }
        std::vector<double> inside(g.cells());
        for (std::size_t i = 0; i < inside.size(); ++i) {
            inside[i] = 0.5 * cs.envelope().values().back();
        }
        EXPECT_LE(max_abs_diff(project_values(inside, cs), inside), 1e-12);
    }
}

TEST(Projection, MatchesBruteForceOnFourCells) {
    const auto g = CellGrid::dyadic(-1, 1, 2);
    std::mt19937_64 rng(41);
    // a nonincreasing envelope (exact isotonic path) and a rising one (alternating projections)
    const GriddedDensity falling(g, {1.5, 1.2, 0.8, 0.4});
    const GriddedDensity rising(g, {0.4, 0.8, 1.0, 1.2});
    for (const auto& env : {falling, rising}) {
        for (auto mode : {ConstraintMode::monotone, ConstraintMode::bounded_variation}) {
            const ConstraintSet cs(env, 0.3 + mu_norm(env), mode);
            // an envelope of mu-norm 0.3 with R = 0.3, so the variation budget binds
            std::vector<double> small(env.values());
            for (double& v : small) {
                v *= 0.3 / mu_norm(env);
            }
            const ConstraintSet tight(GriddedDensity(g, small), 0.3, mode);
            for (int rep = 0; rep < 25; ++rep) {
                const auto x0 = random_values(rng, 4, -0.5, 2.0);
                const auto x1 = random_values(rng, 4, -0.1, 0.5);
                EXPECT_LE(max_abs_diff(project_values(x0, cs, {1e-13, 100000}), oracle::project(x0, cs)), 1e-6);
                EXPECT_LE(max_abs_diff(project_values(x1, tight, {1e-13, 100000}), oracle::project(x1, tight)), 1e-6);
            }
        }
    }
}

TEST(Projection, Nonexpansive) {
    const auto g = CellGrid::dyadic(-3, 3, 3);
    std::mt19937_64 rng(43);
    for (auto mode : {ConstraintMode::monotone, ConstraintMode::bounded_variation}) {
        const auto cs = ConstraintSet::with_default_envelope(g, 2.0, mode);
        for (int rep = 0; rep < 20; ++rep) {
            const auto x = random_values(rng, g.cells(), -1.0, 3.0);
            const auto y = random_values(rng, g.cells(), -1.0, 3.0);
            EXPECT_LE(euclid(project_values(x, cs), project_values(y, cs)), euclid(x, y) + 1e-9);
        }
    }
}

TEST(MuDistance, SameGridIsExact) {
    const auto g = CellGrid::dyadic(-2, 2, 2);
    const GriddedDensity a(g, {3, 2, 2, 1, 1, 0.5, 0.5, 0.1});
    const GriddedDensity b(g, {1, 2, 3, 1, 0, 0.5, 0.7, 0.1});
    std::vector<double> diff(g.cells());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        diff[i] = a.values()[i] - b.values()[i];
    }
    EXPECT_NEAR(mu_distance(a, JumpDensity(b)), mu_norm(g, diff), 1e-15);
}

TEST(MuDistance, ZeroEstimateGivesTruthNorm) {
    const JumpDensity k(ExponentialJumps{1.0, 1.0});
    EXPECT_NEAR(mu_distance(GriddedDensity::zero(CellGrid::dyadic(-4, 4, 1)), k), k.mu_norm(), 1e-9);
}

TEST(MuDistance, MatchesRiemannAgainstAnalyticTruth) {
    const auto g = CellGrid::dyadic(-4, 4, 2);
    std::mt19937_64 rng(7);
    auto v = random_values(rng, g.cells(), 0.0, 1.5);
    std::sort(v.rbegin(), v.rend());
    const GriddedDensity est(g, v);
    const JumpDensity k(ExponentialJumps{1.0, 1.0});
    const double ref =
        oracle::riemann([&](double z) { return std::abs(est(z) - k(z)) * std::min(z, 1.0); }, 0.0, 64.0, 8000000);
    EXPECT_NEAR(mu_distance(est, k), ref, 1e-6);
}
