#pragma once

// Distance in L1(mu) between a gridded estimate and a reference density, with
// the reference treated exactly: pieces are split at z = 1 and at the points
// where the reference crosses the estimate, so each integrand is smooth.

#include <algorithm>
#include <cmath>
#include <vector>

#include "cbi/density.hpp"
#include "cbi/jump_density.hpp"
#include "cbi/quadrature.hpp"

namespace cbi {

namespace detail {

/// Integral of |k(z) - level| (z ^ 1) over [a, b], where k is smooth on (a, b).
inline double abs_gap_integral(const JumpDensity& k, double level, double a, double b, const QuadratureOptions& q) {
    constexpr int kProbes = 32;
    std::vector<double> cuts{a};
    const auto gap = [&](double z) { return k(z) - level; };
    double z_prev = a + (b - a) * 1e-12;
    double g_prev = gap(z_prev);
    for (int i = 1; i <= kProbes; ++i) {
        const double z = i == kProbes ? b - (b - a) * 1e-12 : a + (b - a) * i / kProbes;
        const double g = gap(z);
        if ((g_prev < 0.0) != (g < 0.0)) {
            double lo = z_prev;
            double hi = z;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                ((gap(mid) < 0.0) == (g_prev < 0.0) ? lo : hi) = mid;
            }
            cuts.push_back(0.5 * (lo + hi));
        }
        z_prev = z;
        g_prev = g;
    }
    cuts.push_back(b);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        s += integrate_adaptive([&](double z) { return std::abs(gap(z)) * std::min(z, 1.0); }, cuts[i], cuts[i + 1],
                                q);
    }
    return s;
}

/// Integral of k(z) (z ^ 1) over (a, b], a >= 0, b possibly infinite.
inline double mu_mass_of(const JumpDensity& k, double a, double b, const QuadratureOptions& q) {
    double s = 0.0;
    if (a < 1.0) {
        const double hi = std::min(b, 1.0);
        s += integrate_adaptive([&](double z) { return z * k(z); }, a, hi, q);
    }
    if (b > 1.0) {
        s += k.mass(std::max(a, 1.0), b);
    }
    return s;
}

}  // namespace detail

/// ||estimate - truth||_mu = int |estimate(z) - truth(z)| (z ^ 1) dz over (0, inf).
inline double mu_distance(const GriddedDensity& estimate, const JumpDensity& truth, const QuadratureOptions& q = {}) {
    if (const auto* g = std::get_if<GriddedDensity>(&truth.family())) {
        if (g->grid() == estimate.grid()) {
            double s = 0.0;
            for (std::size_t i = 0; i < estimate.cells(); ++i) {
                s += std::abs(estimate.values()[i] - g->values()[i]) * estimate.grid().mu_mass(i);
            }
            return s;
        }
    }
    const auto& grid = estimate.grid();
    std::vector<double> breaks = grid.breakpoints();
    if (const auto* g = std::get_if<GriddedDensity>(&truth.family())) {
        breaks.insert(breaks.end(), g->grid().breakpoints().begin(), g->grid().breakpoints().end());
    }
    if (1.0 > grid.left(0) && 1.0 < grid.right(grid.cells() - 1)) {
        breaks.push_back(1.0);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    const double z0 = grid.left(0);
    const double z1 = grid.right(grid.cells() - 1);
    double s = detail::mu_mass_of(truth, 0.0, z0, q) + detail::mu_mass_of(truth, z1, kInfinity, q);
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double a = breaks[i];
        const double b = breaks[i + 1];
        if (a < z0 || b > z1) {
            continue;  // covered by the two tail terms
        }
        s += detail::abs_gap_integral(truth, estimate(0.5 * (a + b)), a, b, q);
    }
    return s;
}

}  // namespace cbi
