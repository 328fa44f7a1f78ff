#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iwknn {

/// Mean and population standard deviation of one sample series.
struct SampleStats {
    double mu = 0.0;
    double sigma = 0.0;
    std::size_t count = 0;
};

/// Acceptance interval [mu - g_inf*sigma, mu + g_sup*sigma] for one
/// (reference point, AP) pair, fitted offline and reused online.
struct FilterParams {
    double g_inf = 0.0;
    double g_sup = 0.0;
    double epsilon = 0.0;
    double mu = 0.0;
    double sigma = 0.0;

    double lower() const { return mu - g_inf * sigma; }
    double upper() const { return mu + g_sup * sigma; }
};

struct TooFewSamplesError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline constexpr double kDefaultGridStep = 0.01;
inline constexpr double kDefaultGMax = 6.0;
inline constexpr std::size_t kMinFitSamples = 10;

inline SampleStats empirical_stats(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("empirical_stats: empty input");
    double sum = 0.0;
    for (double v : samples) sum += v;
    const double mu = sum / static_cast<double>(samples.size());
    double sq = 0.0;
    for (double v : samples) sq += (v - mu) * (v - mu);
    const double var = sq / static_cast<double>(samples.size());
    return SampleStats{mu, std::sqrt(var), samples.size()};
}

namespace detail {

// Smallest retained count satisfying count/n >= 1 - epsilon; the small slack
// absorbs float error when (1-epsilon)*n is an exact integer.
inline std::size_t required_coverage_count(std::size_t n, double epsilon) {
    double raw = (1.0 - epsilon) * static_cast<double>(n) - 1e-9;
    if (raw <= 0.0) return 0;
    return static_cast<std::size_t>(std::ceil(raw));
}

// Number of sorted samples inside the closed interval [lo, hi].
inline std::size_t count_inside_sorted(const std::vector<double>& sorted, double lo, double hi) {
    auto first = std::lower_bound(sorted.begin(), sorted.end(), lo);
    auto last = std::upper_bound(sorted.begin(), sorted.end(), hi);
    return last >= first ? static_cast<std::size_t>(last - first) : 0;
}

} // namespace detail

/// Fits the smallest asymmetric interval (by g_inf + g_sup) whose empirical
/// coverage of the fitting samples is at least 1 - epsilon.
///
/// Both multipliers are searched on the grid {0, grid_step, ..., g_max}.
/// Ties on the objective prefer the smaller g_sup, then the smaller g_inf:
/// fades are the expected anomaly, so the lower bound gets the slack.
/// Runs offline only; the scan exploits that for a fixed g_sup the minimal
/// feasible g_inf is non-increasing in g_sup, so the whole grid is covered
/// with O(grid) coverage checks.
inline FilterParams fit_asymmetric_bounds(std::span<const double> samples, double epsilon,
                                          double grid_step = kDefaultGridStep,
                                          double g_max = kDefaultGMax) {
    if (samples.size() < kMinFitSamples) {
        throw TooFewSamplesError(
            "fit_asymmetric_bounds: need at least " + std::to_string(kMinFitSamples) +
            " samples, got " + std::to_string(samples.size()) +
            "; fall back to symmetric 3-sigma bounds");
    }
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw std::invalid_argument("fit_asymmetric_bounds: epsilon must be in (0, 1)");
    }
    if (!(grid_step > 0.0)) {
        throw std::invalid_argument("fit_asymmetric_bounds: grid_step must be > 0");
    }

    const SampleStats stats = empirical_stats(samples);
    FilterParams params;
    params.epsilon = epsilon;
    params.mu = stats.mu;
    params.sigma = stats.sigma;
    if (stats.sigma == 0.0) {
        return params; // interval degenerates to {mu}, full coverage
    }

    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());

    const int steps = static_cast<int>(std::llround(g_max / grid_step));
    const std::size_t need = detail::required_coverage_count(sorted.size(), epsilon);

    auto feasible = [&](int i_inf, int i_sup) {
        const double lo = stats.mu - (i_inf * grid_step) * stats.sigma;
        const double hi = stats.mu + (i_sup * grid_step) * stats.sigma;
        return detail::count_inside_sorted(sorted, lo, hi) >= need;
    };

    int best_sum = -1;
    int best_inf = steps;
    int best_sup = steps;
    int cur = steps; // minimal feasible i_inf so far, walks down as i_sup grows
    for (int i_sup = 0; i_sup <= steps; ++i_sup) {
        if (!feasible(cur, i_sup)) continue;
        while (cur > 0 && feasible(cur - 1, i_sup)) --cur;
        const int sum = cur + i_sup;
        if (best_sum < 0 || sum < best_sum) { // strict: keeps the smaller i_sup on ties
            best_sum = sum;
            best_inf = cur;
            best_sup = i_sup;
        }
        if (cur == 0) break; // no later i_sup can improve the objective
    }
    // best_sum < 0 means even the cap interval misses the coverage target
    // (possible only for epsilon < 1/36 on pathological shapes); return the cap.
    params.g_inf = best_inf * grid_step;
    params.g_sup = best_sup * grid_step;
    return params;
}

/// Samples inside the closed acceptance interval, order preserved.
inline std::vector<double> apply_filter(std::span<const double> samples,
                                        const FilterParams& params) {
    const double lo = params.lower();
    const double hi = params.upper();
    std::vector<double> retained;
    retained.reserve(samples.size());
    for (double v : samples) {
        if (v >= lo && v <= hi) retained.push_back(v);
    }
    return retained;
}

/// Mean of the retained samples; falls back to the fitted mu when the
/// interval rejects everything (externally supplied params only).
inline double filtered_mean(std::span<const double> samples, const FilterParams& params) {
    const double lo = params.lower();
    const double hi = params.upper();
    double sum = 0.0;
    std::size_t count = 0;
    for (double v : samples) {
        if (v >= lo && v <= hi) {
            sum += v;
            ++count;
        }
    }
    if (count == 0) return params.mu;
    return sum / static_cast<double>(count);
}

} // namespace iwknn
