#pragma once

// Primal active-set method for   min 0.5 |M x - y|^2   subject to  G x <= h.
// M may be rank deficient; steps are minimum-norm least-squares solutions on
// the null space of the working constraints.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace cbi::detail {

struct Polyhedron {
    Eigen::MatrixXd g;
    Eigen::VectorXd h;
};

/// Started from a feasible x. Returns nothing on stalling or an infeasible start.
inline std::optional<Eigen::VectorXd> active_set_least_squares(const Eigen::MatrixXd& m, const Eigen::VectorXd& y,
                                                               const Polyhedron& poly, Eigen::VectorXd x,
                                                               int max_iter = 1000) {
    const Eigen::Index n = x.size();
    const auto& g = poly.g;
    const auto& h = poly.h;
    const double scale = std::max({1.0, x.cwiseAbs().maxCoeff(), h.cwiseAbs().maxCoeff()});
    if (((g * x - h).array() > 1e-9 * scale).any()) {
        return std::nullopt;
    }

    std::vector<Eigen::Index> work;
    std::vector<char> in_work(static_cast<std::size_t>(g.rows()), 0);
    const auto rows_of = [&](const std::vector<Eigen::Index>& idx) {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), n);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            out.row(static_cast<Eigen::Index>(k)) = g.row(idx[k]);
        }
        return out;
    };
    for (Eigen::Index j = 0; j < g.rows() && static_cast<Eigen::Index>(work.size()) < n; ++j) {
        if (h(j) - g.row(j).dot(x) <= 1e-12 * scale) {
            auto trial = work;
            trial.push_back(j);
            if (Eigen::FullPivLU<Eigen::MatrixXd>(rows_of(trial)).rank() == static_cast<Eigen::Index>(trial.size())) {
                work = std::move(trial);
                in_work[static_cast<std::size_t>(j)] = 1;
            }
        }
    }

    bool at_face_minimum = false;  // the last step reached the minimiser on the working face
    for (int it = 0; it < max_iter; ++it) {
        if (at_face_minimum) {
            at_face_minimum = false;
            if (work.empty()) {
                return x;
            }
            const Eigen::VectorXd grad = m.transpose() * (m * x - y);
            const Eigen::VectorXd mult = rows_of(work).transpose().completeOrthogonalDecomposition().solve(-grad);
            Eigen::Index worst = 0;
            const double least = mult.minCoeff(&worst);
            if (least >= -1e-12 * std::max(1.0, grad.norm())) {
                return x;
            }
            in_work[static_cast<std::size_t>(work[static_cast<std::size_t>(worst)])] = 0;
            work.erase(work.begin() + worst);
            continue;
        }
        Eigen::MatrixXd z;
        if (work.empty()) {
            z = Eigen::MatrixXd::Identity(n, n);
        } else {
            const Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows_of(work), Eigen::ComputeFullV);
            z = svd.matrixV().rightCols(n - static_cast<Eigen::Index>(work.size()));
        }
        Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
        if (z.cols() > 0) {
            p = z * (m * z).completeOrthogonalDecomposition().solve(y - m * x);
        }
        if (p.cwiseAbs().maxCoeff() <= 1e-14 * scale) {
            at_face_minimum = true;
            continue;
        }
        double alpha = 1.0;
        Eigen::Index block = -1;
        for (Eigen::Index j = 0; j < g.rows(); ++j) {
            if (in_work[static_cast<std::size_t>(j)]) {
                continue;
            }
            const double gp = g.row(j).dot(p);
            if (gp > 1e-15 * scale) {
                const double a = std::max(0.0, (h(j) - g.row(j).dot(x)) / gp);
                if (a < alpha) {
                    alpha = a;
                    block = j;
                }
            }
        }
        x += alpha * p;
        if (block >= 0) {
            work.push_back(block);
            in_work[static_cast<std::size_t>(block)] = 1;
        } else {
            at_face_minimum = true;
        }
    }
    return std::nullopt;
}

}  // namespace cbi::detail
