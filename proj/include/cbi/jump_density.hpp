#pragma once

// Jump intensity densities k(z): analytic families with closed-form transforms,
// and gridded step functions.

#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <variant>

#include <boost/math/special_functions/expint.hpp>

#include "cbi/density.hpp"
#include "cbi/errors.hpp"

namespace cbi {

/// k == 0.
struct NoJumps {};

/// k(z) = scale * exp(-rate z): compound Poisson with total rate scale / rate.
struct ExponentialJumps {
    double scale = 1.0;
    double rate = 1.0;
};

/// k(z) = scale * exp(-rate z) / z: infinite activity, the Levy density of a
/// gamma subordinator.
struct GammaJumps {
    double scale = 1.0;
    double rate = 1.0;
};

namespace detail {

/// x - (1 - e^{-x}) without cancellation for small |x|.
inline double one_minus_exp_primitive(double x) {
    if (std::abs(x) < 0.5) {
        // sum_{k>=2} (-1)^k x^k / k!
        double term = x * x / 2.0;
        double sum = term;
        for (int k = 3; k < 40; ++k) {
            term *= -x / k;
            sum += term;
            if (std::abs(term) < 1e-18 * std::abs(sum)) {
                break;
            }
        }
        return sum;
    }
    return x + std::expm1(-x);
}

/// Integral of (1 - e^{-z u}) dz over (a, b].
inline double cell_one_minus_exp(double a, double b, double u) {
    if (u == 0.0) {
        return 0.0;
    }
    return (one_minus_exp_primitive(b * u) - one_minus_exp_primitive(a * u)) / u;
}

inline double e1(double x) { return boost::math::expint(1, x); }

}  // namespace detail

class JumpDensity {
public:
    using Family = std::variant<NoJumps, ExponentialJumps, GammaJumps, GriddedDensity>;

    JumpDensity() = default;
    JumpDensity(NoJumps f) : family_(f) {}
    JumpDensity(ExponentialJumps f) : family_(f) { check_analytic(f.scale, f.rate); }
    JumpDensity(GammaJumps f) : family_(f) { check_analytic(f.scale, f.rate); }
    JumpDensity(GriddedDensity f) : family_(std::move(f)) {}

    [[nodiscard]] const Family& family() const noexcept { return family_; }

    [[nodiscard]] bool is_zero() const {
        return std::visit(
            [](const auto& f) -> bool {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, NoJumps>) {
                    return true;
                } else if constexpr (std::is_same_v<T, GriddedDensity>) {
                    for (double v : f.values()) {
                        if (v != 0.0) {
                            return false;
                        }
                    }
                    return true;
                } else {
                    return f.scale == 0.0;
                }
            },
            family_);
    }

    /// Infimum of the u for which the Laplace exponent is finite.
    [[nodiscard]] double exponent_domain_min() const {
        return std::visit(
            [](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, ExponentialJumps> || std::is_same_v<T, GammaJumps>) {
                    return f.scale == 0.0 ? -std::numeric_limits<double>::infinity() : -f.rate;
                } else {
                    return -std::numeric_limits<double>::infinity();
                }
            },
            family_);
    }

    /// Integral of (1 - e^{-u z}) k(z) dz, for u above exponent_domain_min().
    [[nodiscard]] double laplace_exponent(double u) const {
        if (!(u > exponent_domain_min())) {
            throw DomainError("jump Laplace exponent diverges at u = " + std::to_string(u));
        }
        return std::visit(
            [u](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, NoJumps>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<T, ExponentialJumps>) {
                    return f.scale * u / (f.rate * (f.rate + u));
                } else if constexpr (std::is_same_v<T, GammaJumps>) {
                    return f.scale * std::log1p(u / f.rate);
                } else {
                    double s = 0.0;
                    const auto& g = f.grid();
                    for (std::size_t i = 0; i < f.cells(); ++i) {
                        if (f.values()[i] != 0.0) {
                            s += f.values()[i] * detail::cell_one_minus_exp(g.left(i), g.right(i), u);
                        }
                    }
                    return s;
                }
            },
            family_);
    }

    [[nodiscard]] double operator()(double z) const {
        return std::visit(
            [z](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, NoJumps>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<T, ExponentialJumps>) {
                    return z > 0.0 ? f.scale * std::exp(-f.rate * z) : 0.0;
                } else if constexpr (std::is_same_v<T, GammaJumps>) {
                    return z > 0.0 ? f.scale * std::exp(-f.rate * z) / z : 0.0;
                } else {
                    return f(z);
                }
            },
            family_);
    }

    /// Integral of k over (a, b], 0 < a < b (b may be infinite).
    [[nodiscard]] double mass(double a, double b) const {
        return std::visit(
            [a, b](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, NoJumps>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<T, ExponentialJumps>) {
                    const double eb = std::isinf(b) ? 0.0 : std::exp(-f.rate * b);
                    return f.scale / f.rate * (std::exp(-f.rate * a) - eb);
                } else if constexpr (std::is_same_v<T, GammaJumps>) {
                    if (!(a > 0.0)) {
                        return f.scale == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
                    }
                    const double eb = std::isinf(b) ? 0.0 : detail::e1(f.rate * b);
                    return f.scale * (detail::e1(f.rate * a) - eb);
                } else {
                    double s = 0.0;
                    const auto& g = f.grid();
                    for (std::size_t i = 0; i < f.cells(); ++i) {
                        const double lo = std::max(a, g.left(i));
                        const double hi = std::min(b, g.right(i));
                        if (hi > lo) {
                            s += f.values()[i] * (hi - lo);
                        }
                    }
                    return s;
                }
            },
            family_);
    }

    /// Integral of z k(z) dz.
    [[nodiscard]] double first_moment() const {
        return std::visit(
            [](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, NoJumps>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<T, ExponentialJumps>) {
                    return f.scale / (f.rate * f.rate);
                } else if constexpr (std::is_same_v<T, GammaJumps>) {
                    return f.scale / f.rate;
                } else {
                    double s = 0.0;
                    const auto& g = f.grid();
                    for (std::size_t i = 0; i < f.cells(); ++i) {
                        s += f.values()[i] * 0.5 * (g.right(i) * g.right(i) - g.left(i) * g.left(i));
                    }
                    return s;
                }
            },
            family_);
    }

    /// Integral of k(z) (z ^ 1) dz.
    [[nodiscard]] double mu_norm() const {
        return std::visit(
            [](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, NoJumps>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<T, ExponentialJumps>) {
                    const double th = f.rate;
                    const double e = std::exp(-th);
                    return f.scale * ((1.0 - e * (1.0 + th)) / (th * th) + e / th);
                } else if constexpr (std::is_same_v<T, GammaJumps>) {
                    const double th = f.rate;
                    return f.scale * (-std::expm1(-th) / th + detail::e1(th));
                } else {
                    return cbi::mu_norm(f);
                }
            },
            family_);
    }

    /// Cell averages of k on a grid: the piecewise-constant discretisation.
    [[nodiscard]] GriddedDensity discretize(const CellGrid& grid) const {
        std::vector<double> values(grid.cells());
        for (std::size_t i = 0; i < grid.cells(); ++i) {
            values[i] = std::max(0.0, mass(grid.left(i), grid.right(i)) / grid.width(i));
        }
        return {grid, std::move(values)};
    }

private:
    static void check_analytic(double scale, double rate) {
        if (!(scale >= 0.0) || !(rate > 0.0) || !std::isfinite(scale) || !std::isfinite(rate)) {
            throw DomainError("analytic jump density needs scale >= 0 and rate > 0");
        }
    }

    Family family_;
};

}  // namespace cbi
