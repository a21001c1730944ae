#pragma once

// Branching mechanism phi(z) = b z + c z^2 and its cumulant flow
//   d/dt v_t(lambda) = -phi(v_t(lambda)),  v_0(lambda) = lambda,
// with the closed-form solution
//   v_t(lambda) = e^{-bt} lambda / (1 + (c lambda / b)(1 - e^{-bt})).

#include <cmath>
#include <limits>
#include <string>

#include "cbi/errors.hpp"

namespace cbi {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

class BranchingMechanism {
public:
    BranchingMechanism(double b, double c) : b_(b), c_(c) {
        if (!(b > 0.0) || !std::isfinite(b)) {
            throw DomainError("branching mechanism requires b > 0 (subcritical), got b = " +
                              std::to_string(b));
        }
        if (!(c >= 0.0) || !std::isfinite(c)) {
            throw DomainError("branching mechanism requires c >= 0, got c = " + std::to_string(c));
        }
    }

    [[nodiscard]] double b() const noexcept { return b_; }
    [[nodiscard]] double c() const noexcept { return c_; }

    [[nodiscard]] double phi(double z) const noexcept { return b_ * z + c_ * z * z; }

private:
    double b_;
    double c_;
};

inline double phi(const BranchingMechanism& mech, double z) noexcept { return mech.phi(z); }

/// 1 - e^{-bt}, accurate for small bt; equals 1 at t = infinity.
inline double decay_complement(const BranchingMechanism& mech, double t) noexcept {
    if (std::isinf(t)) {
        return 1.0;
    }
    return -std::expm1(-mech.b() * t);
}

/// Infimum of the lambdas for which v_t(lambda) is defined.
struct FlowDomainGuard {
    double t;
    double lambda_min;

    static FlowDomainGuard at(const BranchingMechanism& mech, double t) {
        if (!(t >= 0.0)) {
            throw DomainError("flow time must be nonnegative");
        }
        if (mech.c() == 0.0 || t == 0.0) {
            return {t, -kInfinity};
        }
        return {t, -mech.b() / (mech.c() * decay_complement(mech, t))};
    }

    [[nodiscard]] bool admits(double lambda) const noexcept { return lambda > lambda_min; }
};

/// Closed-form cumulant flow. t may be +infinity.
inline double v_flow(const BranchingMechanism& mech, double t, double lambda) {
    if (!(t >= 0.0)) {
        throw DomainError("v_flow: t must be nonnegative");
    }
    if (t == 0.0 || lambda == 0.0) {
        return lambda;
    }
    const double b = mech.b();
    const double c = mech.c();
    const double one_minus = decay_complement(mech, t);
    const double denom = 1.0 + (c * lambda / b) * one_minus;
    if (!(denom > 0.0)) {
        throw DomainError("v_flow: lambda = " + std::to_string(lambda) +
                          " lies outside the flow domain at t = " + std::to_string(t));
    }
    if (std::isinf(t)) {
        return 0.0;
    }
    const double decay = std::exp(-b * t);
    if (c == 0.0) {
        return decay * lambda;
    }
    return decay * lambda / denom;
}

/// Classical RK4 integration of dv/ds = -phi(v); independent of the closed form.
inline double v_ode(const BranchingMechanism& mech, double t, double lambda, double step) {
    if (!(step > 0.0)) {
        throw DomainError("v_ode: step must be positive");
    }
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw DomainError("v_ode: t must be finite and nonnegative");
    }
    if (t == 0.0) {
        return lambda;
    }
    const auto steps = static_cast<long>(std::ceil(t / step));
    const double h = t / static_cast<double>(steps);
    const auto rhs = [&](double v) { return -mech.phi(v); };
    double v = lambda;
    for (long i = 0; i < steps; ++i) {
        const double k1 = rhs(v);
        const double k2 = rhs(v + 0.5 * h * k1);
        const double k3 = rhs(v + 0.5 * h * k2);
        const double k4 = rhs(v + h * k3);
        v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!std::isfinite(v) || (mech.c() > 0.0 && v <= -mech.b() / mech.c())) {
            throw DomainError("v_ode: trajectory left the flow domain");
        }
    }
    return v;
}

}  // namespace cbi
