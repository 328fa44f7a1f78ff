#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <sstream>

#include "helpers.hpp"
#include "iwknn/bench.hpp"
#include "iwknn/selection.hpp"
#include "iwknn/sim.hpp"

using namespace iwknn;
using Catch::Approx;

namespace {

struct Scenario {
    RadioMap map;
    OnlineStream stream;
};

Scenario bench_scenario(std::uint64_t seed) {
    const VenueLayout layout = make_layout(24.0, 15.0, 3.0, 6);
    NoiseModel noise;
    auto campaign = generate_offline_campaign(layout, noise, 80, seed);
    auto map = offline_select(campaign, SelectionThresholds{});
    auto traj = random_trajectory(layout, 3.0, 0.02, 160, seed);
    auto stream = generate_online_stream(layout, noise, traj, seed);
    return Scenario{std::move(map), std::move(stream)};
}

LocatorOptions bench_options() {
    LocatorOptions options;
    options.k = 5;
    options.window_capacity = 20;
    options.candidate_radius = 3.12; // 2 * speed * dt + pitch
    return options;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(storefmt::split(line, ','));
    }
    return rows;
}

} // namespace

TEST_CASE("summary statistics over a known trace") {
    std::vector<TraceRecord> trace;
    for (int i = 1; i <= 10; ++i) {
        TraceRecord r;
        r.error_m = static_cast<double>(i);       // 1..10
        r.elapsed_us = static_cast<double>(11 - i); // 10..1
        trace.push_back(r);
    }
    auto stats = summarize_run(Algorithm::kWknn, trace);
    REQUIRE(stats.queries == 10);
    REQUIRE(stats.mean_error_m == Approx(5.5).margin(1e-12));
    REQUIRE(stats.p50_error_m == 5.0);  // nearest-rank
    REQUIRE(stats.p95_error_m == 10.0);
    REQUIRE(stats.frac_under_2m == Approx(0.1).margin(1e-12));
    REQUIRE(stats.median_latency_us == 5.0);
    REQUIRE(stats.best20_mean_us == Approx(1.5).margin(1e-12));  // {1,2}
    REQUIRE(stats.worst20_mean_us == Approx(9.5).margin(1e-12)); // {9,10}
    REQUIRE(stats.best20_mean_us <= stats.mean_latency_us);
    REQUIRE(stats.mean_latency_us <= stats.worst20_mean_us);

    std::vector<TraceRecord> tiny(trace.begin(), trace.begin() + 3);
    REQUIRE_THROWS_AS(summarize_run(Algorithm::kWknn, tiny), std::invalid_argument);
}

TEST_CASE("bench runs all three algorithms and writes consistent reports") {
    auto scenario = bench_scenario(61);
    auto report = run_bench(scenario.map, scenario.stream, bench_options(), 20);
    REQUIRE(report.runs.size() == 3);
    REQUIRE(report.runs[0].algorithm == Algorithm::kIwknn);
    REQUIRE(report.runs[1].algorithm == Algorithm::kWknn);
    REQUIRE(report.runs[2].algorithm == Algorithm::kKnn);

    const std::size_t q = scenario.stream.slots.size();

    auto check_cdf = [&](const AlgoRun& run) {
        std::ostringstream out;
        write_error_cdf_csv(run.trace, out);
        auto rows = parse_csv(out.str());
        REQUIRE(rows.size() == q + 1);
        double prev_err = -1.0;
        double prev_frac = 0.0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double err = std::stod(rows[i][0]);
            const double frac = std::stod(rows[i][1]);
            REQUIRE(err >= prev_err);
            REQUIRE(frac >= prev_frac);
            prev_err = err;
            prev_frac = frac;
        }
        REQUIRE(prev_frac == 1.0);
    };
    auto check_hist = [&](const AlgoRun& run) {
        std::ostringstream out;
        write_error_hist_csv(run.trace, out);
        auto rows = parse_csv(out.str());
        std::size_t total = 0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            REQUIRE(std::stod(rows[i][1]) - std::stod(rows[i][0]) ==
                    Approx(kHistogramBinWidth).margin(1e-12));
            total += static_cast<std::size_t>(std::stoul(rows[i][2]));
        }
        REQUIRE(total == q);
    };

    for (const auto& run : report.runs) {
        REQUIRE(run.trace.size() == q);
        REQUIRE(run.stats.frac_under_2m >= 0.0);
        REQUIRE(run.stats.frac_under_2m <= 1.0);
        REQUIRE(run.stats.best20_mean_us <= run.stats.mean_latency_us);
        REQUIRE(run.stats.mean_latency_us <= run.stats.worst20_mean_us);
        check_cdf(run);
        check_hist(run);
    }

    // latency partitions: recompute one by hand from the trace
    const auto& wknn_run = report.runs[1];
    std::vector<double> lat;
    for (const auto& r : wknn_run.trace) lat.push_back(r.elapsed_us);
    std::sort(lat.begin(), lat.end());
    const std::size_t q20 = lat.size() / 5;
    double best = 0.0;
    for (std::size_t i = 0; i < q20; ++i) best += lat[i];
    best /= static_cast<double>(q20);
    REQUIRE(wknn_run.stats.best20_mean_us == Approx(best).margin(1e-9));
}

TEST_CASE("bench error columns are reproducible; latency is wall-clock") {
    auto scenario = bench_scenario(62);
    auto r1 = run_bench(scenario.map, scenario.stream, bench_options(), 10);
    auto r2 = run_bench(scenario.map, scenario.stream, bench_options(), 10);
    for (std::size_t a = 0; a < r1.runs.size(); ++a) {
        REQUIRE(r1.runs[a].trace.size() == r2.runs[a].trace.size());
        for (std::size_t i = 0; i < r1.runs[a].trace.size(); ++i) {
            const auto& x = r1.runs[a].trace[i];
            const auto& y = r2.runs[a].trace[i];
            REQUIRE(std::memcmp(&x.x, &y.x, sizeof(double)) == 0);
            REQUIRE(std::memcmp(&x.y, &y.y, sizeof(double)) == 0);
            REQUIRE(std::memcmp(&x.error_m, &y.error_m, sizeof(double)) == 0);
        }
    }
}

TEST_CASE("summary CSV carries one row per algorithm") {
    auto scenario = bench_scenario(63);
    auto report = run_bench(scenario.map, scenario.stream, bench_options(), 10);
    std::vector<AlgoStats> stats;
    for (const auto& run : report.runs) stats.push_back(run.stats);

    std::ostringstream summary;
    write_summary_csv(stats, summary);
    auto rows = parse_csv(summary.str());
    REQUIRE(rows.size() == 4);
    REQUIRE(rows[0][0] == "algorithm");
    REQUIRE(rows[1][0] == "iwknn");
    REQUIRE(rows[2][0] == "wknn");
    REQUIRE(rows[3][0] == "knn");

    std::ostringstream latency;
    write_latency_csv(stats, latency);
    auto lrows = parse_csv(latency.str());
    REQUIRE(lrows.size() == 4);
    REQUIRE(lrows[0].size() == 5);
}
