#pragma once

// Empirical log-Laplace transforms of a low-frequency sample
//   g_{1,n}(l) = ln( (1/n) sum_{k=1}^n exp(-l X_k) )
//   g_{2,n}(l) = ln( (1/n) sum_{k=1}^n exp(-l X_k + X_{k-1} v(l)) )
// and the one-step martingale differences used for the risk-bound diagnostics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cbi/errors.hpp"
#include "cbi/immigration.hpp"
#include "cbi/lambda_grid.hpp"
#include "cbi/mechanism.hpp"
#include "cbi/observations.hpp"

namespace cbi {

/// Largest exponent accepted by empirical_g2 before it reports an overflow.
inline constexpr double kMaxSafeExponent = 700.0;

struct EmpiricalTransforms {
    std::vector<double> g1n;
    std::vector<double> g2n;
    std::size_t n = 0;
};

namespace detail {

/// ln(mean(exp(a_k))) via a max shift.
inline double log_mean_exp(const std::vector<double>& a) {
    const double m = *std::max_element(a.begin(), a.end());
    double s = 0.0;
    for (double x : a) {
        s += std::exp(x - m);
    }
    return m + std::log(s / static_cast<double>(a.size()));
}

}  // namespace detail

inline std::vector<double> empirical_g1(const ObservationSeries& series, const LambdaGrid& lgrid) {
    const auto& x = series.values();
    const std::size_t n = series.n();
    std::vector<double> out(lgrid.size(), 0.0);
    const double xmin = *std::min_element(x.begin() + 1, x.end());
    for (std::size_t j = 0; j < lgrid.size(); ++j) {
        const double lambda = lgrid.nodes()[j];
        if (lambda == 0.0) {
            continue;
        }
        // shift by the largest exponent, -lambda * min X
        double s = 0.0;
        for (std::size_t k = 1; k <= n; ++k) {
            s += std::exp(-lambda * (x[k] - xmin));
        }
        out[j] = -lambda * xmin + std::log(s / static_cast<double>(n));
    }
    return out;
}

inline std::vector<double> empirical_g2(const ObservationSeries& series, const LambdaGrid& lgrid,
                                        const BranchingMechanism& mech) {
    const auto& x = series.values();
    const std::size_t n = series.n();
    std::vector<double> out(lgrid.size(), 0.0);
    std::vector<double> a(n);
    for (std::size_t j = 0; j < lgrid.size(); ++j) {
        const double lambda = lgrid.nodes()[j];
        if (lambda == 0.0) {
            continue;
        }
        const double v = v_flow(mech, series.delta(), lambda);
        for (std::size_t k = 1; k <= n; ++k) {
            a[k - 1] = -lambda * x[k] + x[k - 1] * v;
            if (!(std::abs(a[k - 1]) <= kMaxSafeExponent)) {
                throw OverflowError("empirical_g2: exponent " + std::to_string(a[k - 1]) +
                                    " at lambda = " + std::to_string(lambda) +
                                    " leaves the safe range");
            }
        }
        out[j] = detail::log_mean_exp(a);
    }
    return out;
}

inline EmpiricalTransforms empirical_transforms(const ObservationSeries& series, const LambdaGrid& lgrid,
                                                const BranchingMechanism& mech) {
    return {empirical_g1(series, lgrid), empirical_g2(series, lgrid, mech), series.n()};
}

/// L_{1,n}(lambda) = exp(g_{1,n}(lambda)) at a single point.
inline double empirical_laplace(const ObservationSeries& series, double lambda) {
    const auto& x = series.values();
    double s = 0.0;
    for (std::size_t k = 1; k < x.size(); ++k) {
        s += std::exp(-lambda * x[k]);
    }
    return s / static_cast<double>(series.n());
}

struct XiDiagnostics {
    std::vector<double> xi;
    double mean = 0.0;
    double variance = 0.0;
};

/// xi_k(l) = exp{-l X_k + X_{k-1} v(l) + int_0^delta psi(v_s(l)) ds} - 1, k = 1..n,
/// with the empirical mean and (population) variance.
inline XiDiagnostics xi_diagnostics(const ObservationSeries& series, const BranchingMechanism& mech,
                                    const ImmigrationSpec& imm, double lambda,
                                    const QuadratureOptions& q = {}) {
    XiDiagnostics out;
    const auto& x = series.values();
    const std::size_t n = series.n();
    out.xi.assign(n, 0.0);
    if (lambda == 0.0) {
        return out;
    }
    const double v = v_flow(mech, series.delta(), lambda);
    const double shift = psi_time_integral(mech, imm, series.delta(), lambda, q);
    for (std::size_t k = 1; k <= n; ++k) {
        out.xi[k - 1] = std::expm1(-lambda * x[k] + x[k - 1] * v + shift);
    }
    double s = 0.0;
    for (double e : out.xi) {
        s += e;
    }
    out.mean = s / static_cast<double>(n);
    double ss = 0.0;
    for (double e : out.xi) {
        ss += (e - out.mean) * (e - out.mean);
    }
    out.variance = ss / static_cast<double>(n);
    return out;
}

}  // namespace cbi
