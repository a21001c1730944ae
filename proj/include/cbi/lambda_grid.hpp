#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cbi/errors.hpp"

namespace cbi {

/// Quadrature nodes and weights for the weighted norm
///   ||f||_w^2 = int f(lambda)^2 w(lambda) dlambda  ~  sum_j weights_j f(lambda_j)^2.
/// The weights already include w(lambda).
class LambdaGrid {
public:
    LambdaGrid() = default;

    LambdaGrid(std::vector<double> nodes, std::vector<double> weights)
        : nodes_(std::move(nodes)), weights_(std::move(weights)) {
        if (nodes_.empty() || nodes_.size() != weights_.size()) {
            throw ConfigError("lambda grid needs matching, nonempty node and weight lists");
        }
        if (!(nodes_.front() >= 0.0)) {
            throw ConfigError("lambda grid nodes must be nonnegative");
        }
        bool any_positive = false;
        for (std::size_t j = 0; j < nodes_.size(); ++j) {
            if (j > 0 && !(nodes_[j] > nodes_[j - 1])) {
                throw ConfigError("lambda grid nodes must be strictly ascending");
            }
            if (!std::isfinite(nodes_[j])) {
                throw ConfigError("lambda grid must have compact support");
            }
            if (!(weights_[j] >= 0.0) || !std::isfinite(weights_[j])) {
                throw ConfigError("lambda grid weights must be finite and nonnegative");
            }
            any_positive = any_positive || weights_[j] > 0.0;
        }
        if (!any_positive) {
            throw ConfigError("lambda grid needs at least one positive weight");
        }
    }

    /// Composite trapezoid rule with `count` equispaced nodes on [0, upper],
    /// multiplied by the weight function w (default: indicator of [0, upper]).
    static LambdaGrid trapezoid(std::size_t count, double upper,
                                const std::function<double(double)>& w = {}) {
        if (count < 2 || !(upper > 0.0)) {
            throw ConfigError("trapezoid lambda grid needs >= 2 nodes and a positive upper end");
        }
        std::vector<double> nodes(count);
        std::vector<double> weights(count);
        const double h = upper / static_cast<double>(count - 1);
        for (std::size_t j = 0; j < count; ++j) {
            nodes[j] = h * static_cast<double>(j);
            const double rule = (j == 0 || j + 1 == count) ? 0.5 * h : h;
            weights[j] = rule * (w ? w(nodes[j]) : 1.0);
        }
        return {std::move(nodes), std::move(weights)};
    }

    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] const std::vector<double>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
    [[nodiscard]] double upper() const noexcept { return nodes_.back(); }

    /// sum_j w_j f_j^2
    [[nodiscard]] double norm2(std::span<const double> f) const {
        if (f.size() != size()) {
            throw GridMismatchError("vector length does not match the lambda grid");
        }
        double s = 0.0;
        for (std::size_t j = 0; j < f.size(); ++j) {
            s += weights_[j] * f[j] * f[j];
        }
        return s;
    }

    /// sum_j w_j (f_j - g_j)^2
    [[nodiscard]] double dist2(std::span<const double> f, std::span<const double> g) const {
        if (f.size() != size() || g.size() != size()) {
            throw GridMismatchError("vector length does not match the lambda grid");
        }
        double s = 0.0;
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double d = f[j] - g[j];
            s += weights_[j] * d * d;
        }
        return s;
    }

    LambdaGrid scaled_weights(double factor) const {
        std::vector<double> w = weights_;
        for (double& x : w) {
            x *= factor;
        }
        return {nodes_, std::move(w)};
    }

    bool operator==(const LambdaGrid&) const = default;

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

}  // namespace cbi
