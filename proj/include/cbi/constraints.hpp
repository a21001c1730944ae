#pragma once

// The discretised constraint set K~_R and Euclidean projection onto it.
//
//   monotone:           0 <= k <= envelope, k nonincreasing
//   bounded-variation:  0 <= k <= envelope, TV of k inside each dyadic block <= R
//
// Both are polyhedra. The monotone projection is a bounded isotonic fit; the
// bounded-variation projection splits over blocks.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cbi/density.hpp"
#include "cbi/errors.hpp"
#include "cbi/qp.hpp"

namespace cbi {

enum class ConstraintMode { monotone, bounded_variation };

inline std::string to_string(ConstraintMode m) {
    return m == ConstraintMode::monotone ? "monotone" : "bounded-variation";
}

inline ConstraintMode parse_constraint_mode(const std::string& s) {
    if (s == "monotone") {
        return ConstraintMode::monotone;
    }
    if (s == "bounded-variation" || s == "bv") {
        return ConstraintMode::bounded_variation;
    }
    throw ConfigError("unknown constraint mode '" + s + "' (expected monotone or bounded-variation)");
}

// ---------------------------------------------------------------------------
// Elementary projections

/// Least-squares nonincreasing fit (pool adjacent violators).
inline std::vector<double> pav_nonincreasing(std::span<const double> y) {
    struct Pool {
        double sum;
        std::size_t count;
        [[nodiscard]] double mean() const { return sum / static_cast<double>(count); }
    };
    std::vector<Pool> pools;
    pools.reserve(y.size());
    for (double v : y) {
        pools.push_back({v, 1});
        // a violation is a later pool with a larger mean
        while (pools.size() > 1 && pools[pools.size() - 2].mean() < pools.back().mean()) {
            const Pool last = pools.back();
            pools.pop_back();
            pools.back().sum += last.sum;
            pools.back().count += last.count;
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (const auto& p : pools) {
        out.insert(out.end(), p.count, p.mean());
    }
    return out;
}

/// Least-squares nonincreasing fit with 0 <= x_i <= upper_i. Pool adjacent
/// violators where a pool's value is its mean clamped to [0, min upper over the
/// pool]; exact for any upper bounds, ordered or not.
inline std::vector<double> bounded_pav_nonincreasing(std::span<const double> y, std::span<const double> upper) {
    struct Pool {
        double sum;
        std::size_t count;
        double cap;
        [[nodiscard]] double value() const { return std::clamp(sum / static_cast<double>(count), 0.0, cap); }
    };
    std::vector<Pool> pools;
    pools.reserve(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        pools.push_back({y[i], 1, upper[i]});
        while (pools.size() > 1 && pools[pools.size() - 2].value() < pools.back().value()) {
            const Pool last = pools.back();
            pools.pop_back();
            pools.back().sum += last.sum;
            pools.back().count += last.count;
            pools.back().cap = std::min(pools.back().cap, last.cap);
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (const auto& p : pools) {
        out.insert(out.end(), p.count, p.value());
    }
    return out;
}

inline double total_variation(std::span<const double> x) {
    double tv = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        tv += std::abs(x[i] - x[i - 1]);
    }
    return tv;
}

/// Exact solution of min_x 0.5 ||x - y||^2 + weight * TV(x) (1D total-variation
/// denoising), by the direct taut-string style scan: each constant segment is
/// extended while some value keeps the dual variable inside [-weight, weight].
inline std::vector<double> tv_denoise(std::span<const double> y, double weight) {
    const std::size_t n = y.size();
    std::vector<double> x(y.begin(), y.end());
    if (n < 2 || weight <= 0.0) {
        return x;
    }
    std::size_t seg_start = 0;  // first index of the segment under construction
    std::size_t k = 0;          // current scan position
    std::size_t last_neg = 0;   // last index where the upper candidate was pinned
    std::size_t last_pos = 0;   // last index where the lower candidate was pinned
    double lo_value = y[0] - weight;  // candidate value if the segment ends with a downward jump
    double hi_value = y[0] + weight;  // candidate value if the segment ends with an upward jump
    double dual_lo = weight;          // dual slack associated with lo_value
    double dual_hi = -weight;         // dual slack associated with hi_value

    auto emit = [&](std::size_t through, double value) {
        while (seg_start <= through) {
            x[seg_start++] = value;
        }
    };

    for (;;) {
        while (k == n - 1) {
            if (dual_lo < 0.0) {
                emit(last_pos, lo_value);
                k = last_pos = seg_start;
                lo_value = y[k];
                dual_lo = weight;
                dual_hi = lo_value + dual_lo - hi_value;
            } else if (dual_hi > 0.0) {
                emit(last_neg, hi_value);
                k = last_neg = seg_start;
                hi_value = y[k];
                dual_hi = -weight;
                dual_lo = hi_value + dual_hi - lo_value;
            } else {
                lo_value += dual_lo / static_cast<double>(k - seg_start + 1);
                emit(k, lo_value);
                return x;
            }
        }
        dual_lo += y[k + 1] - lo_value;
        dual_hi += y[k + 1] - hi_value;
        if (dual_lo < -weight) {
            // downward jump after the segment: it takes lo_value
            emit(last_pos, lo_value);
            k = last_pos = last_neg = seg_start;
            lo_value = y[k];
            hi_value = lo_value + 2.0 * weight;
            dual_lo = weight;
            dual_hi = -weight;
        } else if (dual_hi > weight) {
            // upward jump after the segment: it takes hi_value
            emit(last_neg, hi_value);
            k = last_pos = last_neg = seg_start;
            hi_value = y[k];
            lo_value = hi_value - 2.0 * weight;
            dual_lo = weight;
            dual_hi = -weight;
        } else {
            ++k;
            const auto len = static_cast<double>(k - seg_start + 1);
            if (dual_lo >= weight) {
                lo_value += (dual_lo - weight) / len;
                dual_lo = weight;
                last_pos = k;
            }
            if (dual_hi <= -weight) {
                hi_value += (dual_hi + weight) / len;
                dual_hi = -weight;
                last_neg = k;
            }
        }
    }
}

/// Euclidean projection onto { x : TV(x) <= radius }. The projection is the
/// TV-denoised signal whose weight makes the constraint tight; the weight is
/// found by bisection, keeping the feasible side of the bracket.
inline std::vector<double> project_tv_ball(std::span<const double> y, double radius) {
    std::vector<double> x(y.begin(), y.end());
    if (total_variation(y) <= radius) {
        return x;
    }
    if (radius <= 0.0) {
        const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
        std::fill(x.begin(), x.end(), mean);
        return x;
    }
    // at weight >= max |prefix sum of (y - mean)| the denoised signal is constant
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double hi = 0.0;
    double run = 0.0;
    for (double v : y) {
        run += v - mean;
        hi = std::max(hi, std::abs(run));
    }
    hi *= 1.0 + 1e-12;
    double lo = 0.0;
    std::vector<double> best = tv_denoise(y, hi);
    for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        auto cand = tv_denoise(y, mid);
        if (total_variation(cand) <= radius) {
            hi = mid;
            best = std::move(cand);
        } else {
            lo = mid;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------

/// Discretised K~_R: an envelope on a cell grid, a per-block variation budget R
/// and a shape mode.
class ConstraintSet {
public:
    ConstraintSet(GriddedDensity envelope, double radius, ConstraintMode mode)
        : envelope_(std::move(envelope)), radius_(radius), mode_(mode) {
        if (!(radius > 0.0) || !std::isfinite(radius)) {
            throw ConfigError("constraint radius R must be positive");
        }
        if (mu_norm(envelope_) > radius_ * (1.0 + 1e-12)) {
            throw ConfigError("envelope mu-norm " + std::to_string(mu_norm(envelope_)) +
                              " exceeds R = " + std::to_string(radius_));
        }
    }

    /// Envelope proportional to min(1, 1/z^2), taken at each cell's left end so it
    /// dominates the continuous profile, and scaled to mu-norm exactly R.
    static GriddedDensity default_envelope(const CellGrid& grid, double radius) {
        std::vector<double> v(grid.cells());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double z = grid.left(i);
            v[i] = std::min(1.0, 1.0 / (z * z));
        }
        const double scale = radius / mu_norm(grid, v);
        for (double& x : v) {
            x *= scale;
        }
        return {grid, std::move(v)};
    }

    static ConstraintSet with_default_envelope(const CellGrid& grid, double radius, ConstraintMode mode) {
        return {default_envelope(grid, radius), radius, mode};
    }

    [[nodiscard]] const GriddedDensity& envelope() const noexcept { return envelope_; }
    [[nodiscard]] const CellGrid& grid() const noexcept { return envelope_.grid(); }
    [[nodiscard]] double radius() const noexcept { return radius_; }
    [[nodiscard]] ConstraintMode mode() const noexcept { return mode_; }
    [[nodiscard]] std::size_t cells() const noexcept { return envelope_.cells(); }

    [[nodiscard]] bool contains(std::span<const double> k, double tol = 1e-9) const {
        if (k.size() != cells()) {
            return false;
        }
        const auto& env = envelope_.values();
        for (std::size_t i = 0; i < k.size(); ++i) {
            if (k[i] < -tol || k[i] > env[i] + tol) {
                return false;
            }
        }
        if (mode_ == ConstraintMode::monotone) {
            for (std::size_t i = 1; i < k.size(); ++i) {
                if (k[i] > k[i - 1] + tol) {
                    return false;
                }
            }
        } else {
            for (const auto& [first, last] : grid().blocks()) {
                if (total_variation(k.subspan(first, last - first)) > radius_ + tol) {
                    return false;
                }
            }
        }
        return true;
    }

    [[nodiscard]] bool contains(const GriddedDensity& k, double tol = 1e-9) const {
        return k.grid() == grid() && contains(std::span<const double>(k.values()), tol);
    }

    void clip_to_box(std::span<double> x) const {
        const auto& env = envelope_.values();
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = std::clamp(x[i], 0.0, env[i]);
        }
    }

    /// Projection onto the shape set (nonincreasing cone or product of TV balls).
    [[nodiscard]] std::vector<double> project_shape(std::span<const double> x) const {
        if (mode_ == ConstraintMode::monotone) {
            return pav_nonincreasing(x);
        }
        std::vector<double> out(x.begin(), x.end());
        for (const auto& [first, last] : grid().blocks()) {
            const auto piece = project_tv_ball(x.subspan(first, last - first), radius_);
            std::copy(piece.begin(), piece.end(), out.begin() + static_cast<std::ptrdiff_t>(first));
        }
        return out;
    }

private:
    GriddedDensity envelope_;
    double radius_;
    ConstraintMode mode_;
};

struct ProjectionOptions {
    double tol = 1e-10;
    int max_iter = 10000;
};

namespace detail {

/// Longest block whose variation ball is written out row by row (2^(len-1) rows).
inline constexpr std::size_t kMaxEnumeratedBlock = 10;

/// Rows s'Dx <= radius for every sign vector s, over cells [first, first + count).
inline void append_variation_rows(std::vector<Eigen::RowVectorXd>& rows, std::vector<double>& rhs,
                                  Eigen::Index dim, std::size_t first, std::size_t count, double radius) {
    const std::size_t diffs = count - 1;
    for (std::size_t mask = 0; diffs > 0 && mask < (std::size_t{1} << diffs); ++mask) {
        Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(dim);
        for (std::size_t d = 0; d < diffs; ++d) {
            const double sgn = (mask >> d) & 1U ? 1.0 : -1.0;
            r(static_cast<Eigen::Index>(first + d + 1)) += sgn;
            r(static_cast<Eigen::Index>(first + d)) -= sgn;
        }
        rows.push_back(std::move(r));
        rhs.push_back(radius);
    }
}

inline Polyhedron stack_rows(const std::vector<Eigen::RowVectorXd>& rows, const std::vector<double>& rhs,
                             Eigen::Index dim) {
    Polyhedron p{Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), dim),
                 Eigen::VectorXd(static_cast<Eigen::Index>(rows.size()))};
    for (std::size_t k = 0; k < rows.size(); ++k) {
        p.g.row(static_cast<Eigen::Index>(k)) = rows[k];
        p.h(static_cast<Eigen::Index>(k)) = rhs[k];
    }
    return p;
}

inline void append_box_rows(std::vector<Eigen::RowVectorXd>& rows, std::vector<double>& rhs,
                            std::span<const double> env) {
    const auto dim = static_cast<Eigen::Index>(env.size());
    for (Eigen::Index i = 0; i < dim; ++i) {
        Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(dim);
        r(i) = -1.0;
        rows.push_back(r);
        rhs.push_back(0.0);
        r(i) = 1.0;
        rows.push_back(std::move(r));
        rhs.push_back(env[static_cast<std::size_t>(i)]);
    }
}

/// Exact projection of y onto {0 <= x <= env, TV(x) <= radius}.
inline std::optional<std::vector<double>> project_block(std::span<const double> y, std::span<const double> env,
                                                        double radius) {
    std::vector<double> clipped(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        clipped[i] = std::clamp(y[i], 0.0, env[i]);
    }
    if (total_variation(clipped) <= radius) {
        return clipped;
    }
    const auto dim = static_cast<Eigen::Index>(y.size());
    std::vector<Eigen::RowVectorXd> rows;
    std::vector<double> rhs;
    append_box_rows(rows, rhs, env);
    append_variation_rows(rows, rhs, dim, 0, y.size(), radius);
    const auto sol = active_set_least_squares(Eigen::MatrixXd::Identity(dim, dim),
                                              Eigen::Map<const Eigen::VectorXd>(y.data(), dim),
                                              stack_rows(rows, rhs, dim), Eigen::VectorXd::Zero(dim));
    if (!sol) {
        return std::nullopt;
    }
    std::vector<double> out(sol->data(), sol->data() + dim);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::clamp(out[i], 0.0, env[i]);
    }
    return out;
}

/// Dykstra's algorithm between the box and the shape set. Returns the box
/// iterate; the shape constraint holds to the fixed-point tolerance.
inline std::vector<double> dykstra_project(std::span<const double> k0, const ConstraintSet& cs,
                                           const ProjectionOptions& opts) {
    const std::size_t m = k0.size();
    double scale = 1.0;
    for (double v : k0) {
        scale = std::max(scale, std::abs(v));
    }
    const double tol = opts.tol * scale;

    std::vector<double> x(k0.begin(), k0.end());  // shape iterate
    std::vector<double> box(m);
    std::vector<double> p(m, 0.0);  // box correction
    std::vector<double> q(m, 0.0);  // shape correction
    std::vector<double> tmp(m);
    for (int it = 0; it < opts.max_iter; ++it) {
        for (std::size_t i = 0; i < m; ++i) {
            box[i] = x[i] + p[i];
        }
        cs.clip_to_box(box);
        for (std::size_t i = 0; i < m; ++i) {
            p[i] = x[i] + p[i] - box[i];
            tmp[i] = box[i] + q[i];
        }
        auto next = cs.project_shape(tmp);
        double change = 0.0;
        double gap = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            q[i] = tmp[i] - next[i];
            change = std::max(change, std::abs(next[i] - x[i]));
            gap = std::max(gap, std::abs(next[i] - box[i]));
        }
        x = std::move(next);
        if (change <= tol && gap <= tol) {
            return box;
        }
    }
    throw ConvergenceError("projection onto the constraint set did not converge in " +
                           std::to_string(opts.max_iter) + " iterations");
}

}  // namespace detail

/// Linear inequalities G x <= h describing the constraint set, or nothing when a
/// variation block is too long to enumerate.
inline std::optional<detail::Polyhedron> constraint_polyhedron(const ConstraintSet& cs) {
    const auto& env = cs.envelope().values();
    const auto dim = static_cast<Eigen::Index>(env.size());
    std::vector<Eigen::RowVectorXd> rows;
    std::vector<double> rhs;
    detail::append_box_rows(rows, rhs, env);
    if (cs.mode() == ConstraintMode::monotone) {
        for (Eigen::Index i = 0; i + 1 < dim; ++i) {
            Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(dim);
            r(i + 1) = 1.0;
            r(i) = -1.0;
            rows.push_back(std::move(r));
            rhs.push_back(0.0);
        }
    } else {
        for (const auto& [first, last] : cs.grid().blocks()) {
            if (last - first > detail::kMaxEnumeratedBlock) {
                return std::nullopt;
            }
            detail::append_variation_rows(rows, rhs, dim, first, last - first, cs.radius());
        }
    }
    return detail::stack_rows(rows, rhs, dim);
}

/// Euclidean projection onto the constraint set. Monotone mode is a bounded
/// isotonic fit. Bounded-variation mode separates over blocks, each solved
/// exactly by an active-set method; blocks too long to enumerate fall back to
/// Dykstra's algorithm on the whole vector.
inline std::vector<double> project_values(std::span<const double> k0, const ConstraintSet& cs,
                                          const ProjectionOptions& opts = {}) {
    if (k0.size() != cs.cells()) {
        throw GridMismatchError("project: vector has " + std::to_string(k0.size()) +
                                " entries, constraint grid has " + std::to_string(cs.cells()));
    }
    for (double v : k0) {
        if (!std::isfinite(v)) {
            throw DomainError("project: input must be finite");
        }
    }
    const auto& env = cs.envelope().values();
    if (cs.mode() == ConstraintMode::monotone) {
        return bounded_pav_nonincreasing(k0, env);
    }
    std::vector<double> out(k0.size());
    const std::span<const double> envs(env);
    for (const auto& [first, last] : cs.grid().blocks()) {
        if (last - first > detail::kMaxEnumeratedBlock) {
            return detail::dykstra_project(k0, cs, opts);
        }
        const auto piece =
            detail::project_block(k0.subspan(first, last - first), envs.subspan(first, last - first), cs.radius());
        if (!piece) {
            return detail::dykstra_project(k0, cs, opts);
        }
        std::copy(piece->begin(), piece->end(), out.begin() + static_cast<std::ptrdiff_t>(first));
    }
    return out;
}

inline GriddedDensity project(std::span<const double> k0, const ConstraintSet& cs,
                              const ProjectionOptions& opts = {}) {
    return {cs.grid(), project_values(k0, cs, opts)};
}

}  // namespace cbi
