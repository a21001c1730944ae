#pragma once

// Thin wrappers over Boost.Math quadrature that enforce an absolute/relative
// tolerance pair and turn a missed tolerance into a QuadratureError.

#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cbi/errors.hpp"

namespace cbi {

struct QuadratureOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    unsigned max_depth = 18;
};

/// Adaptive 15-point Gauss-Kronrod over a finite interval. Endpoints are never
/// evaluated, so integrable endpoint singularities are allowed.
template <class F>
double integrate_adaptive(F&& f, double a, double b, const QuadratureOptions& opts = {}) {
    if (a == b) {
        return 0.0;
    }
    double error = 0.0;
    double l1 = 0.0;
    // Boost's stopping rule is relative to the L1 norm; ask for the tighter of
    // the two so that the absolute floor can also be honoured.
    const double result = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, opts.max_depth, opts.rel_tol * 1e-2, &error, &l1);
    if (!std::isfinite(result)) {
        throw QuadratureError("adaptive quadrature produced a non-finite value on [" +
                              std::to_string(a) + ", " + std::to_string(b) + "]");
    }
    const double allowed = std::max(opts.abs_tol, opts.rel_tol * std::abs(result));
    if (!(error <= allowed)) {
        throw QuadratureError("adaptive quadrature missed tolerance on [" + std::to_string(a) +
                              ", " + std::to_string(b) + "]: error estimate " +
                              std::to_string(error));
    }
    return result;
}

/// Fixed 8-point Gauss-Legendre rule.
template <class F>
double integrate_gauss8(F&& f, double a, double b) {
    return boost::math::quadrature::gauss<double, 8>::integrate(f, a, b);
}

}  // namespace cbi
