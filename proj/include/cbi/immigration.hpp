#pragma once

// Immigration mechanism psi(z) = beta z + int (1 - e^{-z u}) k(u) du and the
// Laplace-transform functionals of the CBI process built from (phi, psi).

#include <cmath>
#include <string>

#include "cbi/errors.hpp"
#include "cbi/jump_density.hpp"
#include "cbi/mechanism.hpp"
#include "cbi/quadrature.hpp"

namespace cbi {

struct ImmigrationSpec {
    double beta = 0.0;
    JumpDensity density;

    ImmigrationSpec() = default;
    ImmigrationSpec(double beta_, JumpDensity density_) : beta(beta_), density(std::move(density_)) {
        if (!(beta >= 0.0) || !std::isfinite(beta)) {
            throw DomainError("immigration drift beta must be finite and >= 0");
        }
    }
};

inline double psi(const ImmigrationSpec& imm, double z) {
    return imm.beta * z + imm.density.laplace_exponent(z);
}

/// int_0^t v_s(lambda) ds, in closed form (t may be infinite, lambda inside the flow domain).
inline double flow_time_integral(const BranchingMechanism& mech, double t, double lambda) {
    if (lambda == 0.0 || t == 0.0) {
        return 0.0;
    }
    const double vt = v_flow(mech, t, lambda);
    if (mech.c() == 0.0) {
        return (lambda - vt) / mech.b();
    }
    const double r = mech.c() / mech.b();
    return (std::log1p(r * lambda) - std::log1p(r * vt)) / mech.c();
}

namespace detail {

// Time-domain quadrature of s -> f(v_s(lambda)) over [0, t]. For t = infinity the
// horizon is extended geometrically until the remaining tail, bounded by
// |f(v_S)| / b (the flow decays like e^{-bs}), drops below tail_tol.
template <class F>
double time_domain_integral(const BranchingMechanism& mech, double t, double lambda, F&& f,
                            const QuadratureOptions& q, double tail_tol = 1e-10) {
    const auto integrand = [&](double s) { return f(v_flow(mech, s, lambda)); };
    if (std::isfinite(t)) {
        double total = 0.0;
        double s0 = 0.0;
        while (s0 < t) {
            const double s1 = std::min(t, s0 + std::max(1.0, s0));
            total += integrate_adaptive(integrand, s0, s1, q);
            s0 = s1;
        }
        return total;
    }
    double total = 0.0;
    double s0 = 0.0;
    double len = 1.0;
    for (int seg = 0; seg < 200; ++seg) {
        const double s1 = s0 + len;
        total += integrate_adaptive(integrand, s0, s1, q);
        s0 = s1;
        len *= 2.0;
        const double tail = std::abs(f(v_flow(mech, s0, lambda))) / mech.b();
        if (tail < tail_tol) {
            return total;
        }
    }
    throw QuadratureError("time-domain tail truncation did not reach tolerance");
}

}  // namespace detail

/// int_0^t psi(v_s(lambda)) ds, for t in (0, infinity].
///
/// lambda > 0 uses the substitution u = v_s(lambda), du = -phi(u) ds, giving
/// int_{v_t(lambda)}^{lambda} psi(u) / phi(u) du; the drift part is closed form.
/// lambda < 0 integrates directly in time.
inline double psi_time_integral(const BranchingMechanism& mech, const ImmigrationSpec& imm, double t,
                                double lambda, const QuadratureOptions& q = {}) {
    if (!(t >= 0.0)) {
        throw DomainError("psi_time_integral: t must be nonnegative");
    }
    if (lambda == 0.0 || t == 0.0) {
        return 0.0;
    }
    if (!FlowDomainGuard::at(mech, t).admits(lambda)) {
        throw DomainError("psi_time_integral: lambda = " + std::to_string(lambda) +
                          " is outside the flow domain");
    }
    if (lambda < 0.0) {
        return detail::time_domain_integral(
            mech, t, lambda, [&](double v) { return psi(imm, v); }, q);
    }
    double total = imm.beta * flow_time_integral(mech, t, lambda);
    if (imm.density.is_zero()) {
        return total;
    }
    const double lower = v_flow(mech, t, lambda);
    const auto ratio = [&](double u) { return imm.density.laplace_exponent(u) / mech.phi(u); };
    try {
        total += integrate_adaptive(ratio, lower, lambda, q);
    } catch (const QuadratureError& e) {
        if (lower == 0.0) {
            throw NonIntegrableError(std::string("psi/phi is not integrable at 0: ") + e.what());
        }
        throw;
    }
    return total;
}

/// E_x[exp(-lambda X_t)] = exp{-x v_t(lambda) - int_0^t psi(v_s(lambda)) ds}.
inline double transition_laplace(const BranchingMechanism& mech, const ImmigrationSpec& imm, double x,
                                 double t, double lambda, const QuadratureOptions& q = {}) {
    if (!(x >= 0.0) || !(lambda >= 0.0) || !(t > 0.0)) {
        throw DomainError("transition_laplace needs x >= 0, t > 0 and lambda >= 0");
    }
    return std::exp(-x * v_flow(mech, t, lambda) - psi_time_integral(mech, imm, t, lambda, q));
}

/// Laplace transform of the stationary law: exp{-int_0^inf psi(v_s(lambda)) ds}.
inline double stationary_laplace(const BranchingMechanism& mech, const ImmigrationSpec& imm,
                                 double lambda, const QuadratureOptions& q = {}) {
    if (!(lambda >= 0.0)) {
        throw DomainError("stationary_laplace needs lambda >= 0");
    }
    return std::exp(-psi_time_integral(mech, imm, kInfinity, lambda, q));
}

/// int_0^lambda psi(z) / phi(z) dz; a finite value certifies ergodicity.
inline double check_ergodicity(const BranchingMechanism& mech, const ImmigrationSpec& imm,
                               double lambda, const QuadratureOptions& q = {}) {
    if (!(lambda > 0.0)) {
        throw DomainError("check_ergodicity needs lambda > 0");
    }
    return psi_time_integral(mech, imm, kInfinity, lambda, q);
}

/// Asymptotic variance of the one-step martingale differences xi_k(lambda):
///   W = exp{-I_inf(v(2l) - 2 v(l)) - I_delta(2l) + 2 I_delta(l)} - 1,
/// with v = v_delta and I_t(x) = int_0^t psi(v_s(x)) ds.
inline double asymptotic_variance_W(const BranchingMechanism& mech, const ImmigrationSpec& imm,
                                    double lambda, double delta = 1.0,
                                    const QuadratureOptions& q = {}) {
    if (lambda == 0.0) {
        return 0.0;
    }
    const double v1 = v_flow(mech, delta, lambda);
    const double v2 = v_flow(mech, delta, 2.0 * lambda);
    const double arg = v2 - 2.0 * v1;
    if (!FlowDomainGuard::at(mech, kInfinity).admits(arg)) {
        throw DomainError("asymptotic_variance_W: v(2l) - 2v(l) = " + std::to_string(arg) +
                          " is outside the stationary flow domain at lambda = " +
                          std::to_string(lambda));
    }
    const double exponent = -psi_time_integral(mech, imm, kInfinity, arg, q) -
                            psi_time_integral(mech, imm, delta, 2.0 * lambda, q) +
                            2.0 * psi_time_integral(mech, imm, delta, lambda, q);
    return std::expm1(exponent);
}

}  // namespace cbi
