#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "cbi/errors.hpp"
#include "cbi/format.hpp"

namespace cbi {

struct SeriesMeta {
    std::uint64_t seed = 0;
    std::string config_hash;
};

/// X_0, ..., X_n sampled at spacing delta.
class ObservationSeries {
public:
    ObservationSeries() = default;

    ObservationSeries(std::vector<double> values, double delta = 1.0, SeriesMeta meta = {})
        : values_(std::move(values)), delta_(delta), meta_(std::move(meta)) {
        if (values_.size() < 2) {
            throw ConfigError("an observation series needs X_0 and at least one more value");
        }
        for (double v : values_) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw DomainError("observations must be finite and nonnegative");
            }
        }
        if (!(delta_ > 0.0)) {
            throw ConfigError("sampling interval must be positive");
        }
    }

    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    /// Number of transitions n (the series holds n + 1 values).
    [[nodiscard]] std::size_t n() const noexcept { return values_.empty() ? 0 : values_.size() - 1; }
    [[nodiscard]] double delta() const noexcept { return delta_; }
    [[nodiscard]] const SeriesMeta& meta() const noexcept { return meta_; }

    /// X_0..X_m, for prefix studies.
    [[nodiscard]] ObservationSeries prefix(std::size_t m) const {
        return {std::vector<double>(values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(m + 1)),
                delta_, meta_};
    }

    [[nodiscard]] bool is_constant() const noexcept {
        for (double v : values_) {
            if (v != values_.front()) {
                return false;
            }
        }
        return true;
    }

private:
    std::vector<double> values_;
    double delta_ = 1.0;
    SeriesMeta meta_;
};

/// One `t,value` row per observation, no header.
inline void write_series_csv(std::ostream& os, const ObservationSeries& s) {
    for (std::size_t k = 0; k < s.values().size(); ++k) {
        os << fmt17(static_cast<double>(k) * s.delta()) << ',' << fmt17(s.values()[k]) << '\n';
    }
}

/// Accepts one value per line or `t,value` pairs; a non-numeric first line is
/// treated as a header. Spacing is taken from the t column when present.
inline ObservationSeries read_series_csv(std::istream& is) {
    std::vector<double> values;
    std::vector<double> times;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        line = trim(line);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto fields = split(line, ',');
        try {
            if (fields.size() == 1) {
                values.push_back(parse_double(fields[0]));
            } else if (fields.size() == 2) {
                times.push_back(parse_double(fields[0]));
                values.push_back(parse_double(fields[1]));
            } else {
                throw ConfigError("series CSV rows need one or two fields: " + line);
            }
        } catch (const ConfigError&) {
            if (!first) {
                throw;
            }
        }
        first = false;
    }
    if (!times.empty() && times.size() != values.size()) {
        throw ConfigError("series CSV mixes one- and two-column rows");
    }
    double delta = 1.0;
    if (times.size() >= 2) {
        delta = times[1] - times[0];
        for (std::size_t k = 1; k < times.size(); ++k) {
            if (std::abs(times[k] - times[k - 1] - delta) > 1e-9 * std::max(1.0, std::abs(times[k]))) {
                throw ConfigError("series CSV times are not equidistant");
            }
        }
    }
    return {std::move(values), delta};
}

inline ObservationSeries load_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open series CSV " + path);
    }
    return read_series_csv(in);
}

}  // namespace cbi
