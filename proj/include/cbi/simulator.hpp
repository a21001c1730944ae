#pragma once

// Sample paths of
//   dX = (beta - b X) dt + sqrt(2 c X) dB + int z N(dt, dz),   N ~ PRM(dt k(z) dz),
// observed at spacing delta. The exact scheme composes exact CIR transitions with
// the compound-Poisson jumps of size > epsilon; the Euler scheme uses full
// truncation on a substep grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "cbi/errors.hpp"
#include "cbi/immigration.hpp"
#include "cbi/jump_density.hpp"
#include "cbi/mechanism.hpp"
#include "cbi/observations.hpp"
#include "cbi/rng.hpp"

namespace cbi {

enum class Scheme { exact_cir_jumps, euler };

inline std::string to_string(Scheme s) { return s == Scheme::euler ? "euler" : "exact-cir-jumps"; }

inline Scheme parse_scheme(const std::string& s) {
    if (s == "exact-cir-jumps" || s == "exact") {
        return Scheme::exact_cir_jumps;
    }
    if (s == "euler") {
        return Scheme::euler;
    }
    throw ConfigError("unknown simulation scheme '" + s + "' (expected exact-cir-jumps or euler)");
}

struct SimConfig {
    BranchingMechanism mech{1.0, 1.0};
    ImmigrationSpec imm;
    Scheme scheme = Scheme::exact_cir_jumps;
    int substeps = 50;
    double small_jump_cutoff = 0.0;
    long burn_in = 20;
    std::uint64_t seed = 0;
    double x0 = 0.0;
    double delta = 1.0;

    /// ceil(20 / b): about twenty reversion times.
    static long default_burn_in(const BranchingMechanism& mech) {
        return static_cast<long>(std::ceil(20.0 / mech.b()));
    }
};

struct PathSample {
    ObservationSeries series;
    long jumps_emitted = 0;
    Scheme scheme_used = Scheme::exact_cir_jumps;
    std::vector<std::string> warnings;
};

/// Jump epochs and sizes of the compound-Poisson part restricted to z > epsilon.
class JumpSampler {
public:
    JumpSampler(const JumpDensity& density, double epsilon) : density_(density), epsilon_(epsilon) {
        if (!(epsilon >= 0.0)) {
            throw ConfigError("small-jump cutoff must be >= 0");
        }
        rate_ = density.is_zero() ? 0.0 : density.mass(epsilon, std::numeric_limits<double>::infinity());
        if (!std::isfinite(rate_)) {
            throw ConfigError("truncated jump rate is infinite; set a positive small_jump_cutoff");
        }
        if (const auto* g = std::get_if<GriddedDensity>(&density.family())) {
            double acc = 0.0;
            for (std::size_t i = 0; i < g->cells(); ++i) {
                const double lo = std::max(epsilon, g->grid().left(i));
                const double hi = g->grid().right(i);
                acc += hi > lo ? g->values()[i] * (hi - lo) : 0.0;
                cumulative_.push_back(acc);
            }
        }
    }

    [[nodiscard]] double rate() const noexcept { return rate_; }

    double sample(SplitMix64& rng) const {
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, NoJumps>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<T, ExponentialJumps>) {
                    return epsilon_ - std::log(rng.uniform01()) / f.rate;
                } else if constexpr (std::is_same_v<T, GammaJumps>) {
                    // shifted exponential proposal, accept with probability epsilon / z
                    for (;;) {
                        const double z = epsilon_ - std::log(rng.uniform01()) / f.rate;
                        if (rng.uniform01() * z <= epsilon_) {
                            return z;
                        }
                    }
                } else {
                    // inverse CDF of the (piecewise linear) truncated distribution function
                    const double target = rng.uniform01() * cumulative_.back();
                    const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), target);
                    const auto i = static_cast<std::size_t>(it - cumulative_.begin());
                    const double before = i == 0 ? 0.0 : cumulative_[i - 1];
                    const double lo = std::max(epsilon_, f.grid().left(i));
                    return lo + (target - before) / f.values()[i];
                }
            },
            density_.family());
    }

private:
    const JumpDensity& density_;
    double epsilon_;
    double rate_ = 0.0;
    std::vector<double> cumulative_;
};

namespace detail {

inline long poisson(SplitMix64& rng, double mean) {
    if (!(mean > 0.0)) {
        return 0;
    }
    boost::random::poisson_distribution<long, double> dist(mean);
    return dist(rng);
}

/// Exact CIR transition over time h: a Poisson-mixed gamma,
///   X_h = c (1 - e^{-bh}) / b * Gamma(beta / c + N),  N ~ Poisson(x e^{-bh} b / (c (1 - e^{-bh}))).
inline double cir_step(SplitMix64& rng, const BranchingMechanism& mech, double beta, double x, double h) {
    if (h <= 0.0) {
        return x;
    }
    const double b = mech.b();
    const double c = mech.c();
    const double decay = std::exp(-b * h);
    const double one_minus = -std::expm1(-b * h);
    if (c == 0.0) {
        return x * decay + beta / b * one_minus;
    }
    const double scale = c * one_minus / b;
    const long count = poisson(rng, x * decay / scale);
    const double shape = beta / c + static_cast<double>(count);
    if (shape <= 0.0) {
        return 0.0;  // zero is absorbing without immigration
    }
    boost::random::gamma_distribution<double> gamma(shape, 1.0);
    return scale * gamma(rng);
}

struct Propagator {
    const SimConfig& cfg;
    JumpSampler jumps;
    std::vector<double> epochs;
    boost::random::normal_distribution<double> normal{0.0, 1.0};

    explicit Propagator(const SimConfig& c) : cfg(c), jumps(c.imm.density, c.small_jump_cutoff) {}

    double advance(SplitMix64& rng, double x, long& jump_count) {
        const double dt = cfg.delta;
        if (cfg.scheme == Scheme::exact_cir_jumps) {
            const long count = poisson(rng, jumps.rate() * dt);
            epochs.resize(static_cast<std::size_t>(count));
            for (auto& e : epochs) {
                e = rng.uniform01() * dt;
            }
            std::sort(epochs.begin(), epochs.end());
            double t = 0.0;
            for (double e : epochs) {
                x = cir_step(rng, cfg.mech, cfg.imm.beta, x, e - t);
                x += jumps.sample(rng);
                t = e;
            }
            jump_count += count;
            return cir_step(rng, cfg.mech, cfg.imm.beta, x, dt - t);
        }
        const double h = dt / cfg.substeps;
        const double b = cfg.mech.b();
        const double c = cfg.mech.c();
        for (int s = 0; s < cfg.substeps; ++s) {
            const double xp = std::max(x, 0.0);
            x = x + (cfg.imm.beta - b * xp) * h + std::sqrt(2.0 * c * xp * h) * normal(rng);
            const long count = poisson(rng, jumps.rate() * h);
            for (long j = 0; j < count; ++j) {
                x += jumps.sample(rng);
            }
            jump_count += count;
            x = std::max(x, 0.0);
        }
        return x;
    }
};

inline void validate(const SimConfig& cfg, std::vector<std::string>& warnings) {
    if (!(cfg.x0 >= 0.0) || !std::isfinite(cfg.x0)) {
        throw ConfigError("initial state x0 must be finite and >= 0");
    }
    if (cfg.burn_in < 0) {
        throw ConfigError("burn_in must be >= 0");
    }
    if (!(cfg.delta > 0.0)) {
        throw ConfigError("sampling interval must be positive");
    }
    if (cfg.scheme == Scheme::euler) {
        if (cfg.substeps < 1) {
            throw ConfigError("euler scheme needs substeps >= 1");
        }
        if (cfg.substeps < 20) {
            warnings.emplace_back("euler substeps below 20 per unit interval");
        }
    }
}

}  // namespace detail

inline PathSample simulate_path(const SimConfig& cfg, std::size_t n) {
    if (n < 1) {
        throw ConfigError("simulate_path needs n >= 1");
    }
    PathSample out;
    out.scheme_used = cfg.scheme;
    detail::validate(cfg, out.warnings);
    detail::Propagator prop(cfg);
    SplitMix64 rng(cfg.seed);
    double x = cfg.x0;
    long discarded = 0;
    for (long k = 0; k < cfg.burn_in; ++k) {
        x = prop.advance(rng, x, discarded);
    }
    std::vector<double> values(n + 1);
    values[0] = x;
    for (std::size_t k = 1; k <= n; ++k) {
        x = prop.advance(rng, x, out.jumps_emitted);
        values[k] = x;
    }
    out.series = ObservationSeries(std::move(values), cfg.delta, {cfg.seed, {}});
    return out;
}

/// Independent draws of X_delta given X_0 = x.
inline std::vector<double> one_step_samples(const SimConfig& cfg, double x, std::size_t count) {
    if (!(x >= 0.0)) {
        throw DomainError("one_step_samples needs x >= 0");
    }
    std::vector<std::string> warnings;
    detail::validate(cfg, warnings);
    detail::Propagator prop(cfg);
    SplitMix64 rng(cfg.seed);
    std::vector<double> out(count);
    long jumps = 0;
    for (auto& v : out) {
        v = prop.advance(rng, x, jumps);
    }
    return out;
}

}  // namespace cbi
