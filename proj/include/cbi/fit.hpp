#pragma once

// Constrained weighted least-squares projection of an empirical log-Laplace
// curve onto the model class:
//   k_hat = argmin_{k in K~_R} sum_j w_j (gn_j + o_j + (A k)_j)^2,
//   g_hat = -o - A k_hat.
// Solved by accelerated projected gradient with a monotone (function-value)
// restart and step 1/L, L = lambda_max(A^T W A). Every few iterations, and once
// at termination, the active face of the iterate is guessed and the problem
// restricted to it is solved directly, with a primal active-set run from the
// iterate as the second attempt. A candidate is kept only if it does not raise
// the objective and passes the same gradient-mapping test.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cbi/constraints.hpp"
#include "cbi/errors.hpp"
#include "cbi/lambda_grid.hpp"
#include "cbi/operator.hpp"

namespace cbi {

struct FitOptions {
    double tol = 1e-8;        ///< gradient-mapping norm at termination
    int max_iter = 100000;
    double projection_tol = 1e-13;
    int polish_every = 25;  ///< face-polish period in iterations; 0 disables
    double rank_threshold = 1e-12;
};

struct EstimateReport {
    GriddedDensity density;
    std::vector<double> g_hat;
    double objective = 0.0;  ///< sum_j w_j (gn_j - g_hat_j)^2
    int iterations = 0;
    double kkt_residual = 0.0;
    std::vector<std::string> flags;
    std::vector<double> objective_trace;  ///< objective after each iteration

    [[nodiscard]] bool has_flag(const std::string& f) const {
        return std::find(flags.begin(), flags.end(), f) != flags.end();
    }
};

namespace detail {

struct Quadratic {
    Eigen::MatrixXd weighted_a;  // W^{1/2} A
    Eigen::VectorXd weighted_r;  // W^{1/2} r
    Eigen::VectorXd r;
    Eigen::MatrixXd hessian;  // A^T W A
    Eigen::VectorXd linear;   // A^T W r
    double constant;          // r^T W r
    double curvature;         // largest eigenvalue of the hessian

    // 0.5 x^T H x - c^T x + 0.5 r^T W r  ==  0.5 * objective(x)
    [[nodiscard]] double half_objective(const Eigen::VectorXd& x) const {
        return 0.5 * x.dot(hessian * x) - linear.dot(x) + 0.5 * constant;
    }
};

inline Quadratic build_quadratic(std::span<const double> gn, const OperatorMatrix& op) {
    const auto& lg = op.lambda_grid();
    const Eigen::Index rows = op.entries().rows();
    Eigen::VectorXd w(rows);
    Eigen::VectorXd r(rows);
    for (Eigen::Index j = 0; j < rows; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        w(j) = lg.weights()[jj];
        r(j) = -(gn[jj] + op.offset()(j));
    }
    const Eigen::MatrixXd wa = w.asDiagonal() * op.entries();
    Quadratic q;
    q.weighted_a = w.cwiseSqrt().asDiagonal() * op.entries();
    q.weighted_r = w.cwiseSqrt().cwiseProduct(r);
    q.r = r;
    q.hessian = op.entries().transpose() * wa;
    q.linear = wa.transpose() * r;
    q.constant = r.dot(w.asDiagonal() * r);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q.hessian, Eigen::EigenvaluesOnly);
    q.curvature = eig.eigenvalues().maxCoeff();
    return q;
}

inline Eigen::VectorXd project_vec(const Eigen::VectorXd& x, const ConstraintSet& cs, double tol) {
    const auto p = project_values(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), cs,
                                  {tol, 10000});
    return Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
}

/// Affine parametrisation x = basis * theta + fixed of a face of the constraint
/// set, with linear equalities eq * theta = eq_rhs.
struct Face {
    Eigen::MatrixXd basis;
    Eigen::VectorXd fixed;
    Eigen::MatrixXd eq;
    Eigen::VectorXd eq_rhs;
};

inline Face identify_face(const Eigen::VectorXd& x, const ConstraintSet& cs, double delta) {
    const auto m = static_cast<std::size_t>(x.size());
    const auto& env = cs.envelope().values();
    const bool monotone = cs.mode() == ConstraintMode::monotone;

    // cells whose difference to the right neighbour is a binding constraint
    std::vector<bool> tie(m, false);
    std::vector<std::pair<std::size_t, std::size_t>> tight_blocks;
    if (monotone) {
        for (std::size_t i = 0; i + 1 < m; ++i) {
            tie[i] = x(static_cast<Eigen::Index>(i)) - x(static_cast<Eigen::Index>(i + 1)) <= delta;
        }
    } else {
        for (const auto& [first, last] : cs.grid().blocks()) {
            double tv = 0.0;
            for (std::size_t i = first; i + 1 < last; ++i) {
                tv += std::abs(x(static_cast<Eigen::Index>(i + 1)) - x(static_cast<Eigen::Index>(i)));
            }
            if (last - first > 1 && tv >= cs.radius() - delta * static_cast<double>(last - first)) {
                tight_blocks.emplace_back(first, last);
                for (std::size_t i = first; i + 1 < last; ++i) {
                    tie[i] = std::abs(x(static_cast<Eigen::Index>(i + 1)) - x(static_cast<Eigen::Index>(i))) <=
                             delta;
                }
            }
        }
    }

    Face face;
    face.fixed = Eigen::VectorXd::Zero(x.size());
    std::vector<Eigen::Index> run_of(m);
    std::vector<std::vector<std::size_t>> free_runs;
    for (std::size_t start = 0; start < m;) {
        std::size_t end = start + 1;
        while (end < m && tie[end - 1]) {
            ++end;
        }
        double mean = 0.0;
        double cap = env[start];
        for (std::size_t i = start; i < end; ++i) {
            mean += x(static_cast<Eigen::Index>(i));
            cap = std::min(cap, env[i]);
        }
        mean /= static_cast<double>(end - start);
        if (mean <= delta || mean >= cap - delta) {
            const double value = mean <= delta ? 0.0 : cap;
            for (std::size_t i = start; i < end; ++i) {
                face.fixed(static_cast<Eigen::Index>(i)) = value;
                run_of[i] = -1;
            }
        } else {
            for (std::size_t i = start; i < end; ++i) {
                run_of[i] = static_cast<Eigen::Index>(free_runs.size());
            }
            free_runs.emplace_back();
            for (std::size_t i = start; i < end; ++i) {
                free_runs.back().push_back(i);
            }
        }
        start = end;
    }
    const auto p = static_cast<Eigen::Index>(free_runs.size());
    face.basis = Eigen::MatrixXd::Zero(x.size(), p);
    for (Eigen::Index r = 0; r < p; ++r) {
        for (std::size_t i : free_runs[static_cast<std::size_t>(r)]) {
            face.basis(static_cast<Eigen::Index>(i), r) = 1.0;
        }
    }

    // a tight block keeps its sign pattern, so its variation is linear in theta
    std::vector<Eigen::RowVectorXd> rows;
    std::vector<double> rhs;
    for (const auto& [first, last] : tight_blocks) {
        Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(x.size());
        for (std::size_t i = first; i + 1 < last; ++i) {
            if (tie[i]) {
                continue;
            }
            const double d = x(static_cast<Eigen::Index>(i + 1)) - x(static_cast<Eigen::Index>(i));
            const double s = d > 0.0 ? 1.0 : -1.0;
            a(static_cast<Eigen::Index>(i + 1)) += s;
            a(static_cast<Eigen::Index>(i)) -= s;
        }
        const Eigen::RowVectorXd row = a * face.basis;
        if (row.norm() > 0.0) {
            rows.push_back(row);
            rhs.push_back(cs.radius() - a.dot(face.fixed));
        }
    }
    face.eq.resize(static_cast<Eigen::Index>(rows.size()), p);
    face.eq_rhs.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        face.eq.row(static_cast<Eigen::Index>(k)) = rows[k];
        face.eq_rhs(static_cast<Eigen::Index>(k)) = rhs[k];
    }
    return face;
}

/// Minimiser of the objective over the affine hull of a face.
inline Eigen::VectorXd solve_on_face(const Quadratic& q, const Face& face) {
    if (face.basis.cols() == 0) {
        return face.fixed;
    }
    const Eigen::MatrixXd m = q.weighted_a * face.basis;
    const Eigen::VectorXd y = q.weighted_r - q.weighted_a * face.fixed;
    Eigen::VectorXd theta;
    if (face.eq.rows() == 0) {
        theta = m.completeOrthogonalDecomposition().solve(y);
    } else {
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(face.eq, Eigen::ComputeFullV | Eigen::ComputeFullU);
        const Eigen::VectorXd theta0 = svd.solve(face.eq_rhs);
        const Eigen::Index rank = svd.rank();
        const Eigen::MatrixXd null = svd.matrixV().rightCols(face.basis.cols() - rank);
        theta = theta0;
        if (null.cols() > 0) {
            const Eigen::MatrixXd mn = m * null;
            theta += null * mn.completeOrthogonalDecomposition().solve(y - m * theta0);
        }
    }
    return face.basis * theta + face.fixed;
}

}  // namespace detail

/// Norm of the gradient mapping L (x - P(x - grad/L)); zero exactly at the minimiser.
inline double gradient_mapping_norm(const detail::Quadratic& q, const Eigen::VectorXd& x,
                                    const ConstraintSet& cs, double projection_tol) {
    const Eigen::VectorXd grad = q.hessian * x - q.linear;
    const Eigen::VectorXd step = detail::project_vec(x - grad / q.curvature, cs, projection_tol);
    return q.curvature * (x - step).norm();
}

inline EstimateReport fit(std::span<const double> gn, const OperatorMatrix& op, const ConstraintSet& cs,
                          const FitOptions& opts = {}) {
    const auto& lg = op.lambda_grid();
    if (gn.size() != lg.size()) {
        throw GridMismatchError("fit: empirical curve has " + std::to_string(gn.size()) +
                                " nodes, lambda grid has " + std::to_string(lg.size()));
    }
    if (!(cs.grid() == op.grid())) {
        throw GridMismatchError("fit: constraint grid differs from the operator grid");
    }
    for (double g : gn) {
        if (!std::isfinite(g)) {
            throw DomainError("fit: empirical curve must be finite");
        }
    }
    const auto q = detail::build_quadratic(gn, op);
    const auto m = static_cast<Eigen::Index>(cs.cells());

    EstimateReport rep;
    if (!(q.curvature > 0.0)) {
        // A vanishes on the weighted grid: every feasible k fits equally well
        rep.flags.emplace_back("non_unique");
        rep.density = GriddedDensity::zero(cs.grid());
        rep.g_hat = op.apply(rep.density.values());
        rep.objective = lg.dist2(gn, rep.g_hat);
        return rep;
    }
    const double inv_l = 1.0 / q.curvature;

    Eigen::VectorXd x = detail::project_vec(Eigen::VectorXd::Zero(m), cs, opts.projection_tol);
    Eigen::VectorXd y = x;
    double fx = q.half_objective(x);
    double t = 1.0;
    int it = 0;
    double residual = gradient_mapping_norm(q, x, cs, opts.projection_tol);
    const auto poly = constraint_polyhedron(cs);
    const auto polish = [&]() -> bool {
        // residual form of the objective: no cancellation near a zero-residual fit
        const auto exact_half = [&](const Eigen::VectorXd& v) {
            return 0.5 * (q.weighted_a * v - q.weighted_r).squaredNorm();
        };
        const double f_now = exact_half(x);
        std::optional<Eigen::VectorXd> best;
        double f_best = f_now + 1e-14 * std::max(1.0, f_now);
        double r_best = 0.0;
        const auto consider = [&](Eigen::VectorXd cand) {
            if (!cand.allFinite()) {
                return;
            }
            cand = detail::project_vec(cand, cs, opts.projection_tol);
            const double fc = exact_half(cand);
            if (fc > f_best) {
                return;
            }
            const double rc = gradient_mapping_norm(q, cand, cs, opts.projection_tol);
            if (rc <= opts.tol) {
                best = std::move(cand);
                f_best = fc;
                r_best = rc;
            }
        };
        const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
        for (double delta : {1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-3}) {
            consider(detail::solve_on_face(q, detail::identify_face(x, cs, delta * scale)));
        }
        if (poly) {
            if (auto refined = detail::active_set_least_squares(q.weighted_a, q.weighted_r, *poly, x)) {
                consider(*refined);
            }
        }
        if (!best) {
            return false;
        }
        x = *best;
        fx = q.half_objective(x);
        residual = r_best;
        return true;
    };
    bool polished = false;
    while (residual > opts.tol) {
        if (opts.polish_every > 0 && it > 0 && it % opts.polish_every == 0 && polish()) {
            rep.objective_trace.push_back(2.0 * fx);
            polished = true;
            break;
        }
        if (it >= opts.max_iter) {
            throw ConvergenceError("fit: no convergence after " + std::to_string(opts.max_iter) +
                                   " iterations (gradient mapping " + fmt17(residual) + ")");
        }
        ++it;
        const Eigen::VectorXd z =
            detail::project_vec(y - inv_l * (q.hessian * y - q.linear), cs, opts.projection_tol);
        const double fz = q.half_objective(z);
        if (fz <= fx) {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = z + ((t - 1.0) / t_next) * (z - x);
            x = z;
            fx = fz;
            t = t_next;
        } else {
            // restart from the incumbent; the next step is a plain projected gradient step
            y = x;
            t = 1.0;
        }
        rep.objective_trace.push_back(2.0 * fx);
        residual = gradient_mapping_norm(q, x, cs, opts.projection_tol);
    }
    // the gradient-mapping test is loose along weakly determined directions
    if (!polished && opts.polish_every > 0 && polish()) {
        rep.objective_trace.push_back(2.0 * fx);
    }

    std::vector<double> values(x.data(), x.data() + x.size());
    for (double& v : values) {
        v = std::max(v, 0.0);
    }
    rep.density = GriddedDensity(cs.grid(), std::move(values));
    rep.g_hat = op.apply(rep.density.values());
    rep.objective = lg.dist2(gn, rep.g_hat);
    rep.iterations = it;
    rep.kkt_residual = residual;
    if (!op.full_column_rank(opts.rank_threshold)) {
        rep.flags.emplace_back("non_unique");
    }
    // binding constraints: the unconstrained gradient does not vanish at the solution
    const Eigen::VectorXd grad = q.hessian * x - q.linear;
    if (grad.norm() > std::max(10.0 * opts.tol, 1e-6 * q.linear.norm())) {
        rep.flags.emplace_back("boundary_solution");
    }
    return rep;
}

inline EstimateReport fit(const std::vector<double>& gn, const OperatorMatrix& op, const ConstraintSet& cs,
                          const FitOptions& opts = {}) {
    return fit(std::span<const double>(gn), op, cs, opts);
}

/// n * ||g_hat - g||_w^2.
inline double risk_statistic(std::span<const double> g_hat, std::span<const double> truth,
                             const LambdaGrid& lgrid, std::size_t n) {
    return static_cast<double>(n) * lgrid.dist2(g_hat, truth);
}

struct ProjectionInequality {
    double fitted_dist2;     ///< ||g_hat - g||_w^2
    double empirical_dist2;  ///< ||gn - g||_w^2
    [[nodiscard]] bool holds(double tol = 0.0) const { return fitted_dist2 <= 4.0 * empirical_dist2 + tol; }
};

/// ||g_hat - g||^2 <= (||g_hat - gn|| + ||gn - g||)^2 <= 4 ||gn - g||^2 when g is feasible.
inline ProjectionInequality projection_inequality(std::span<const double> g_hat, std::span<const double> gn,
                                                  std::span<const double> truth, const LambdaGrid& lgrid) {
    return {lgrid.dist2(g_hat, truth), lgrid.dist2(gn, truth)};
}

}  // namespace cbi
