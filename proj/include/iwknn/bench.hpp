#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "iwknn/locator.hpp"
#include "iwknn/sim.hpp"
#include "iwknn/store.hpp"
#include "iwknn/types.hpp"

namespace iwknn {

inline constexpr int kDefaultWarmupCalls = 50;
inline constexpr double kHistogramBinWidth = 0.25;

/// Per-algorithm accuracy and latency summary over one benchmark run.
struct AlgoStats {
    Algorithm algorithm = Algorithm::kIwknn;
    std::size_t queries = 0;
    double mean_error_m = 0.0;
    double p50_error_m = 0.0;
    double p95_error_m = 0.0;
    double frac_under_2m = 0.0;
    double mean_latency_us = 0.0;
    double median_latency_us = 0.0;
    double best20_mean_us = 0.0;  // mean of the fastest floor(0.2*Q) calls
    double worst20_mean_us = 0.0; // mean of the slowest floor(0.2*Q) calls
};

struct AlgoRun {
    Algorithm algorithm = Algorithm::kIwknn;
    std::vector<TraceRecord> trace; // one record per measured query
    AlgoStats stats;
};

struct BenchReport {
    std::vector<AlgoRun> runs; // iwknn, wknn, knn
};

namespace detail {

inline double percentile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("percentile: empty sample");
    // nearest-rank on the sorted sample
    const auto rank = static_cast<std::size_t>(
        std::ceil(p * static_cast<double>(sorted.size())));
    const std::size_t idx = rank == 0 ? 0 : rank - 1;
    return sorted[std::min(idx, sorted.size() - 1)];
}

inline double mean_of(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

} // namespace detail

/// Summary statistics over one algorithm's trace. Latency partitions use
/// exactly floor(0.2*Q) samples each, per the report convention.
inline AlgoStats summarize_run(Algorithm algorithm, std::span<const TraceRecord> trace) {
    if (trace.size() < 5) {
        throw std::invalid_argument("summarize_run: need at least 5 queries");
    }
    AlgoStats stats;
    stats.algorithm = algorithm;
    stats.queries = trace.size();

    std::vector<double> errors;
    std::vector<double> latencies;
    errors.reserve(trace.size());
    latencies.reserve(trace.size());
    std::size_t under = 0;
    for (const auto& r : trace) {
        errors.push_back(r.error_m);
        latencies.push_back(r.elapsed_us);
        if (r.error_m < 2.0) ++under;
    }
    stats.mean_error_m = detail::mean_of(errors);
    stats.frac_under_2m = static_cast<double>(under) / static_cast<double>(trace.size());
    std::sort(errors.begin(), errors.end());
    stats.p50_error_m = detail::percentile_sorted(errors, 0.50);
    stats.p95_error_m = detail::percentile_sorted(errors, 0.95);

    stats.mean_latency_us = detail::mean_of(latencies);
    std::sort(latencies.begin(), latencies.end());
    stats.median_latency_us = detail::percentile_sorted(latencies, 0.50);
    const std::size_t q20 = trace.size() / 5;
    stats.best20_mean_us = detail::mean_of(std::span<const double>(latencies.data(), q20));
    stats.worst20_mean_us =
        detail::mean_of(std::span<const double>(latencies.data() + (latencies.size() - q20), q20));
    return stats;
}

/// Runs one algorithm over the stream and collects the trace.
///
/// The first `warmup` slots are located and discarded (session state is
/// reset afterwards), so measured latencies exclude cold caches.
inline AlgoRun run_algorithm(const RadioMap& map, const OnlineStream& stream,
                             const LocatorOptions& options, Algorithm algorithm,
                             int warmup = kDefaultWarmupCalls) {
    AlgoRun run;
    run.algorithm = algorithm;
    Locator locator(map, options);

    const auto locate_one = [&](const StreamSlot& slot) {
        return algorithm == Algorithm::kIwknn ? locator.locate(slot.timestamp_us, slot.rssi)
                                              : locator.locate_baseline(slot.rssi, algorithm);
    };

    const std::size_t warm_count =
        std::min(stream.slots.size(), static_cast<std::size_t>(std::max(warmup, 0)));
    for (std::size_t i = 0; i < warm_count; ++i) locate_one(stream.slots[i]);
    locator.reset();

    run.trace.reserve(stream.slots.size());
    for (const auto& slot : stream.slots) {
        const PositionEstimate est = locate_one(slot);
        TraceRecord rec;
        rec.timestamp_us = slot.timestamp_us;
        rec.x = est.x;
        rec.y = est.y;
        rec.true_x = slot.truth.x;
        rec.true_y = slot.truth.y;
        rec.error_m = std::hypot(est.x - slot.truth.x, est.y - slot.truth.y);
        rec.elapsed_us = est.elapsed_us;
        rec.algorithm = algorithm;
        run.trace.push_back(rec);
    }
    run.stats = summarize_run(algorithm, run.trace);
    return run;
}

/// Runs all three algorithms sequentially on the identical stream; one
/// thread throughout so the latency comparison stays fair.
inline BenchReport run_bench(const RadioMap& map, const OnlineStream& stream,
                             const LocatorOptions& options, int warmup = kDefaultWarmupCalls) {
    BenchReport report;
    for (Algorithm a : {Algorithm::kIwknn, Algorithm::kWknn, Algorithm::kKnn}) {
        report.runs.push_back(run_algorithm(map, stream, options, a, warmup));
    }
    return report;
}

// ---------------------------------------------------------------------------
// report files
// ---------------------------------------------------------------------------

/// Sorted error vs cumulative fraction; ends at exactly 1.
inline void write_error_cdf_csv(std::span<const TraceRecord> trace, std::ostream& out) {
    std::vector<double> errors;
    errors.reserve(trace.size());
    for (const auto& r : trace) errors.push_back(r.error_m);
    std::sort(errors.begin(), errors.end());
    out << "error_m,cum_fraction\n";
    for (std::size_t i = 0; i < errors.size(); ++i) {
        out << storefmt::num(errors[i]) << ","
            << storefmt::num(static_cast<double>(i + 1) / static_cast<double>(errors.size()))
            << "\n";
    }
}

/// Fixed-width error histogram (0.25 m bins); bin counts sum to the query
/// count.
inline void write_error_hist_csv(std::span<const TraceRecord> trace, std::ostream& out) {
    double max_error = 0.0;
    for (const auto& r : trace) max_error = std::max(max_error, r.error_m);
    const auto bins = static_cast<std::size_t>(max_error / kHistogramBinWidth) + 1;
    std::vector<std::size_t> counts(bins, 0);
    for (const auto& r : trace) {
        auto b = static_cast<std::size_t>(r.error_m / kHistogramBinWidth);
        if (b >= bins) b = bins - 1;
        ++counts[b];
    }
    out << "bin_lo_m,bin_hi_m,count\n";
    for (std::size_t b = 0; b < bins; ++b) {
        out << storefmt::num(static_cast<double>(b) * kHistogramBinWidth) << ","
            << storefmt::num(static_cast<double>(b + 1) * kHistogramBinWidth) << "," << counts[b]
            << "\n";
    }
}

inline void write_latency_csv(std::span<const AlgoStats> stats, std::ostream& out) {
    out << "algorithm,mean_latency_us,median_latency_us,best20_mean_us,worst20_mean_us\n";
    for (const auto& s : stats) {
        out << to_string(s.algorithm) << "," << storefmt::num(s.mean_latency_us) << ","
            << storefmt::num(s.median_latency_us) << "," << storefmt::num(s.best20_mean_us) << ","
            << storefmt::num(s.worst20_mean_us) << "\n";
    }
}

inline void write_summary_csv(std::span<const AlgoStats> stats, std::ostream& out) {
    out << "algorithm,queries,mean_error_m,p50_error_m,p95_error_m,frac_under_2m,"
           "mean_latency_us,median_latency_us,best20_mean_us,worst20_mean_us\n";
    for (const auto& s : stats) {
        out << to_string(s.algorithm) << "," << s.queries << "," << storefmt::num(s.mean_error_m)
            << "," << storefmt::num(s.p50_error_m) << "," << storefmt::num(s.p95_error_m) << ","
            << storefmt::num(s.frac_under_2m) << "," << storefmt::num(s.mean_latency_us) << ","
            << storefmt::num(s.median_latency_us) << "," << storefmt::num(s.best20_mean_us) << ","
            << storefmt::num(s.worst20_mean_us) << "\n";
    }
}

/// Writes the full report file set into `dir` (cdf_<algo>.csv,
/// hist_<algo>.csv, latency.csv, summary.csv).
inline void write_report_files(const BenchReport& report, const std::string& dir) {
    auto open = [](const std::string& path) {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot open " + path + " for writing");
        return out;
    };
    std::vector<AlgoStats> stats;
    for (const auto& run : report.runs) {
        stats.push_back(run.stats);
        const std::string suffix = std::string(to_string(run.algorithm)) + ".csv";
        auto cdf = open(dir + "/cdf_" + suffix);
        write_error_cdf_csv(run.trace, cdf);
        auto hist = open(dir + "/hist_" + suffix);
        write_error_hist_csv(run.trace, hist);
    }
    auto latency = open(dir + "/latency.csv");
    write_latency_csv(stats, latency);
    auto summary = open(dir + "/summary.csv");
    write_summary_csv(stats, summary);
}

} // namespace iwknn
