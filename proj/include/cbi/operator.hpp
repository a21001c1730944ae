#pragma once

// The discretised map T from a gridded jump density to its model log-Laplace
// curve,
//   g(lambda_j; k) = -o_j - (A k)_j,
//   o_j    = beta int_0^T v_s(lambda_j) ds,
//   A_{ji} = int_{cell i} Phi_T(lambda_j, z) dz,
//   Phi_T(lambda, z) = int_0^T (1 - e^{-z v_s(lambda)}) ds.

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cbi/density.hpp"
#include "cbi/errors.hpp"
#include "cbi/immigration.hpp"
#include "cbi/lambda_grid.hpp"
#include "cbi/mechanism.hpp"
#include "cbi/quadrature.hpp"

namespace cbi {

/// Phi_T(lambda, z), evaluated as int_{v_T(lambda)}^{lambda} (1 - e^{-z u}) / phi(u) du.
inline double feature(const BranchingMechanism& mech, double lambda, double z, double horizon,
                      const QuadratureOptions& q = {}) {
    if (!(lambda >= 0.0) || !(z > 0.0)) {
        throw DomainError("feature needs lambda >= 0 and z > 0");
    }
    if (lambda == 0.0 || horizon == 0.0) {
        return 0.0;
    }
    const double lower = v_flow(mech, horizon, lambda);
    const auto integrand = [&](double u) {
        // (1 - e^{-zu}) / (u (b + c u)), finite as u -> 0
        return -std::expm1(-z * u) / (u * (mech.b() + mech.c() * u));
    };
    return integrate_adaptive(integrand, lower, lambda, q);
}

class OperatorMatrix {
public:
    OperatorMatrix(double horizon, CellGrid grid, LambdaGrid lgrid, Eigen::MatrixXd entries,
                   Eigen::VectorXd offset)
        : horizon_(horizon),
          grid_(std::move(grid)),
          lgrid_(std::move(lgrid)),
          a_(std::move(entries)),
          offset_(std::move(offset)) {
        if (static_cast<std::size_t>(a_.rows()) != lgrid_.size() ||
            static_cast<std::size_t>(a_.cols()) != grid_.cells() ||
            static_cast<std::size_t>(offset_.size()) != lgrid_.size()) {
            throw GridMismatchError("operator dimensions do not match its grids");
        }
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a_);
        const auto& sv = svd.singularValues();
        sigma_max_ = sv.size() > 0 ? sv(0) : 0.0;
        // rank is at most min(J, M); a wide matrix has a zero singular value
        sigma_min_ = (a_.rows() < a_.cols() || sv.size() == 0) ? 0.0 : sv(sv.size() - 1);
    }

    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] const CellGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const LambdaGrid& lambda_grid() const noexcept { return lgrid_; }
    [[nodiscard]] const Eigen::MatrixXd& entries() const noexcept { return a_; }
    [[nodiscard]] const Eigen::VectorXd& offset() const noexcept { return offset_; }
    [[nodiscard]] double sigma_min() const noexcept { return sigma_min_; }
    [[nodiscard]] double sigma_max() const noexcept { return sigma_max_; }
    [[nodiscard]] bool full_column_rank(double threshold = 1e-12) const noexcept {
        return sigma_min_ > threshold;
    }

    /// -offset - A values
    [[nodiscard]] std::vector<double> apply(std::span<const double> values) const {
        if (values.size() != grid_.cells()) {
            throw GridMismatchError("density has " + std::to_string(values.size()) +
                                    " cells, operator expects " + std::to_string(grid_.cells()));
        }
        const Eigen::Map<const Eigen::VectorXd> k(values.data(), static_cast<Eigen::Index>(values.size()));
        const Eigen::VectorXd g = -offset_ - a_ * k;
        return {g.data(), g.data() + g.size()};
    }

private:
    double horizon_;
    CellGrid grid_;
    LambdaGrid lgrid_;
    Eigen::MatrixXd a_;
    Eigen::VectorXd offset_;
    double sigma_min_ = 0.0;
    double sigma_max_ = 0.0;
};

inline OperatorMatrix assemble_operator(const BranchingMechanism& mech, double beta, const CellGrid& grid,
                                        const LambdaGrid& lgrid, double horizon,
                                        const QuadratureOptions& q = {}) {
    if (!(beta >= 0.0)) {
        throw DomainError("assemble_operator: beta must be >= 0");
    }
    if (!(horizon > 0.0)) {
        throw DomainError("assemble_operator: horizon must be positive");
    }
    const auto rows = static_cast<Eigen::Index>(lgrid.size());
    const auto cols = static_cast<Eigen::Index>(grid.cells());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::VectorXd o = Eigen::VectorXd::Zero(rows);
    for (Eigen::Index j = 0; j < rows; ++j) {
        const double lambda = lgrid.nodes()[static_cast<std::size_t>(j)];
        if (lambda == 0.0) {
            continue;
        }
        o(j) = beta * flow_time_integral(mech, horizon, lambda);
        for (Eigen::Index i = 0; i < cols; ++i) {
            const auto cell = static_cast<std::size_t>(i);
            a(j, i) = integrate_gauss8([&](double z) { return feature(mech, lambda, z, horizon, q); },
                                       grid.left(cell), grid.right(cell));
        }
    }
    return {horizon, grid, lgrid, std::move(a), std::move(o)};
}

inline std::vector<double> model_g(const OperatorMatrix& op, const GriddedDensity& k) {
    if (!(k.grid() == op.grid())) {
        throw GridMismatchError("model_g: density grid differs from the operator grid");
    }
    return op.apply(k.values());
}

struct LipschitzSample {
    double curve_dist2;  ///< ||T k1 - T k2||_w^2
    double mu_dist;      ///< ||k1 - k2||_mu
};

inline LipschitzSample lipschitz_check(const OperatorMatrix& op, const GriddedDensity& k1,
                                       const GriddedDensity& k2) {
    if (!(k1.grid() == k2.grid())) {
        throw GridMismatchError("lipschitz_check: densities live on different grids");
    }
    const auto g1 = model_g(op, k1);
    const auto g2 = model_g(op, k2);
    std::vector<double> diff(k1.cells());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        diff[i] = k1.values()[i] - k2.values()[i];
    }
    return {op.lambda_grid().dist2(g1, g2), mu_norm(k1.grid(), diff)};
}

/// sum_j w_j (max_i A_{ji} / mu(cell_i))^2: an upper bound on
/// ||T k1 - T k2||_w^2 / ||k1 - k2||_mu^2 for every pair on the grid.
inline double continuity_bound(const OperatorMatrix& op) {
    const auto& a = op.entries();
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.rows(); ++j) {
        double c = 0.0;
        for (Eigen::Index i = 0; i < a.cols(); ++i) {
            c = std::max(c, a(j, i) / op.grid().mu_mass(static_cast<std::size_t>(i)));
        }
        s += op.lambda_grid().weights()[static_cast<std::size_t>(j)] * c * c;
    }
    return s;
}

}  // namespace cbi
