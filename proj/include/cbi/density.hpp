#pragma once

// Piecewise-constant jump densities on dyadic-aligned cell grids, and the
// measure mu(dz) = (z ^ 1) dz.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cbi/errors.hpp"
#include "cbi/format.hpp"

namespace cbi {

/// Ascending breakpoints z_0 < ... < z_M > 0. Cell i is (z_i, z_{i+1}].
/// Every power of two inside [z_0, z_M] must be a breakpoint, so the dyadic
/// blocks [2^i, 2^{i+1}] are exact unions of cells.
class CellGrid {
public:
    CellGrid() = default;

    explicit CellGrid(std::vector<double> breakpoints) : breaks_(std::move(breakpoints)) {
        if (breaks_.size() < 2) {
            throw ConfigError("cell grid needs at least two breakpoints");
        }
        if (!(breaks_.front() > 0.0)) {
            throw ConfigError("cell grid breakpoints must be positive");
        }
        for (std::size_t i = 1; i < breaks_.size(); ++i) {
            if (!(breaks_[i] > breaks_[i - 1]) || !std::isfinite(breaks_[i])) {
                throw ConfigError("cell grid breakpoints must be finite and strictly ascending");
            }
        }
        const int lo = static_cast<int>(std::ceil(std::log2(breaks_.front()) - 1e-12));
        const int hi = static_cast<int>(std::floor(std::log2(breaks_.back()) + 1e-12));
        for (int e = lo; e <= hi; ++e) {
            const double p = std::ldexp(1.0, e);
            if (p < breaks_.front() || p > breaks_.back()) {
                continue;
            }
            const auto it = std::lower_bound(breaks_.begin(), breaks_.end(), p * (1.0 - 1e-12));
            if (it == breaks_.end() || std::abs(*it - p) > 1e-12 * p) {
                throw ConfigError("cell grid is not dyadic-aligned: 2^" + std::to_string(e) +
                                  " is not a breakpoint");
            }
            dyadic_.push_back(static_cast<std::size_t>(it - breaks_.begin()));
        }
        build_blocks();
    }

    /// Cells of equal width inside each dyadic block [2^e, 2^{e+1}], e in [lo, hi).
    static CellGrid dyadic(int lo_exponent, int hi_exponent, int cells_per_block) {
        if (hi_exponent <= lo_exponent || cells_per_block < 1) {
            throw ConfigError("dyadic grid needs hi > lo and at least one cell per block");
        }
        std::vector<double> br;
        for (int e = lo_exponent; e < hi_exponent; ++e) {
            const double left = std::ldexp(1.0, e);
            for (int j = 0; j < cells_per_block; ++j) {
                br.push_back(left + left * j / cells_per_block);
            }
        }
        br.push_back(std::ldexp(1.0, hi_exponent));
        return CellGrid(std::move(br));
    }

    [[nodiscard]] std::size_t cells() const noexcept { return breaks_.empty() ? 0 : breaks_.size() - 1; }
    [[nodiscard]] const std::vector<double>& breakpoints() const noexcept { return breaks_; }
    [[nodiscard]] double left(std::size_t i) const { return breaks_[i]; }
    [[nodiscard]] double right(std::size_t i) const { return breaks_[i + 1]; }
    [[nodiscard]] double width(std::size_t i) const { return breaks_[i + 1] - breaks_[i]; }

    /// mu-mass of cell i: integral of (z ^ 1) over the cell.
    [[nodiscard]] double mu_mass(std::size_t i) const {
        const double a = breaks_[i];
        const double b = breaks_[i + 1];
        const double lo = std::min(b, 1.0);
        double mass = 0.0;
        if (a < lo) {
            mass += 0.5 * (lo * lo - a * a);
        }
        if (b > 1.0) {
            mass += b - std::max(a, 1.0);
        }
        return mass;
    }

    /// Maximal runs of cells between consecutive grid points that are powers of two
    /// (or grid ends). Each run is a half-open index range [first, last).
    [[nodiscard]] const std::vector<std::pair<std::size_t, std::size_t>>& blocks() const noexcept {
        return blocks_;
    }

    /// Index of the cell containing z, or cells() when z lies outside (z_0, z_M].
    [[nodiscard]] std::size_t locate(double z) const {
        if (!(z > breaks_.front()) || z > breaks_.back()) {
            return cells();
        }
        const auto it = std::lower_bound(breaks_.begin(), breaks_.end(), z);
        return static_cast<std::size_t>(it - breaks_.begin()) - 1;
    }

    bool operator==(const CellGrid& other) const = default;

private:
    void build_blocks() {
        std::vector<std::size_t> cuts{0};
        for (auto d : dyadic_) {
            if (d != 0 && d != cells()) {
                cuts.push_back(d);
            }
        }
        cuts.push_back(cells());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            blocks_.emplace_back(cuts[i], cuts[i + 1]);
        }
    }

    std::vector<double> breaks_;
    std::vector<std::size_t> dyadic_;
    std::vector<std::pair<std::size_t, std::size_t>> blocks_;
};

/// Nonnegative step function on a CellGrid, zero outside the grid.
class GriddedDensity {
public:
    GriddedDensity() = default;

    GriddedDensity(CellGrid grid, std::vector<double> values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_.cells()) {
            throw GridMismatchError("density has " + std::to_string(values_.size()) +
                                    " values for a grid of " + std::to_string(grid_.cells()) +
                                    " cells");
        }
        for (double v : values_) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw DomainError("gridded density values must be finite and nonnegative");
            }
        }
    }

    static GriddedDensity zero(const CellGrid& grid) {
        return {grid, std::vector<double>(grid.cells(), 0.0)};
    }

    [[nodiscard]] const CellGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    [[nodiscard]] std::size_t cells() const noexcept { return values_.size(); }

    /// k(z) with the cell convention (z_i, z_{i+1}].
    [[nodiscard]] double operator()(double z) const {
        const auto i = grid_.locate(z);
        return i < cells() ? values_[i] : 0.0;
    }

private:
    CellGrid grid_;
    std::vector<double> values_;
};

/// Exact integral of |values| against mu over the grid.
inline double mu_norm(const CellGrid& grid, std::span<const double> values) {
    if (values.size() != grid.cells()) {
        throw GridMismatchError("mu_norm: value count does not match the grid");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        s += std::abs(values[i]) * grid.mu_mass(i);
    }
    return s;
}

inline double mu_norm(const GriddedDensity& k) { return mu_norm(k.grid(), k.values()); }

inline void write_density_csv(std::ostream& os, const GriddedDensity& k) {
    os << "z_left,z_right,value\n";
    for (std::size_t i = 0; i < k.cells(); ++i) {
        os << fmt17(k.grid().left(i)) << ',' << fmt17(k.grid().right(i)) << ','
           << fmt17(k.values()[i]) << '\n';
    }
}

inline GriddedDensity read_density_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || trim(line) != "z_left,z_right,value") {
        throw ConfigError("density CSV must start with header z_left,z_right,value");
    }
    std::vector<double> breaks;
    std::vector<double> values;
    while (std::getline(is, line)) {
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 3) {
            throw ConfigError("density CSV row needs three fields: " + line);
        }
        const double zl = parse_double(fields[0]);
        const double zr = parse_double(fields[1]);
        if (breaks.empty()) {
            breaks.push_back(zl);
        } else if (std::abs(breaks.back() - zl) > 1e-12 * std::max(1.0, zl)) {
            throw ConfigError("density CSV cells are not contiguous at z = " + fields[0]);
        }
        breaks.push_back(zr);
        values.push_back(parse_double(fields[2]));
    }
    if (values.empty()) {
        throw ConfigError("density CSV has no cells");
    }
    return {CellGrid(std::move(breaks)), std::move(values)};
}

inline GriddedDensity load_density_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open density CSV " + path);
    }
    return read_density_csv(in);
}

}  // namespace cbi
