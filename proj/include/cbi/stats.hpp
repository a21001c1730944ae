#pragma once

// Monte-Carlo summaries. Standard errors of time averages along a single path
// use non-overlapping batch means, which absorbs the serial correlation.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace cbi::stats {

inline double mean(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Unbiased sample variance.
inline double variance(std::span<const double> x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) {
        s += (v - m) * (v - m);
    }
    return s / static_cast<double>(x.size() - 1);
}

/// Standard error of the mean of i.i.d. draws.
inline double iid_se(std::span<const double> x) {
    return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

/// Standard error of the mean of a stationary sequence, from `batches` batch means.
inline double batch_means_se(std::span<const double> x, std::size_t batches = 50) {
    const std::size_t len = x.size() / batches;
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        means[b] = mean(x.subspan(b * len, len));
    }
    return std::sqrt(variance(means) / static_cast<double>(batches));
}

inline double median(std::vector<double> x) {
    const std::size_t n = x.size();
    std::sort(x.begin(), x.end());
    return n % 2 == 1 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

/// Large-sample standard error of the median, sqrt(pi/2) * sd / sqrt(n).
inline double median_se(std::span<const double> x) {
    return std::sqrt(M_PI / 2.0) * std::sqrt(variance(x) / static_cast<double>(x.size()));
}

}  // namespace cbi::stats
