#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "iwknn/filter.hpp"
#include "iwknn/sim.hpp"

using namespace iwknn;
using Catch::Approx;

namespace {

// deterministic fade-mixture sample set
std::vector<double> mixture_samples(std::uint64_t seed, std::size_t n, double mu = -60.0,
                                    double sigma = 2.0, double p_fade = 0.2,
                                    double depth = 14.0, double fade_sigma = 3.0) {
    SampleRng rng(seed);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rng.uniform() < p_fade) {
            out.push_back(rng.gaussian(mu - depth, fade_sigma));
        } else {
            out.push_back(rng.gaussian(mu, sigma));
        }
    }
    return out;
}

std::size_t count_inside(std::span<const double> samples, const FilterParams& p) {
    std::size_t inside = 0;
    for (double v : samples) {
        if (v >= p.lower() && v <= p.upper()) ++inside;
    }
    return inside;
}

} // namespace

TEST_CASE("empirical stats hand cases") {
    std::vector<double> constant(20, -60.0);
    auto s = empirical_stats(constant);
    REQUIRE(s.mu == -60.0);
    REQUIRE(s.sigma == 0.0);
    REQUIRE(s.count == 20);

    std::vector<double> two{-58.0, -62.0};
    auto s2 = empirical_stats(two);
    REQUIRE(s2.mu == Approx(-60.0).margin(1e-12));
    REQUIRE(s2.sigma == Approx(2.0).margin(1e-12));

    REQUIRE_THROWS_AS(empirical_stats(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("empirical stats match a streaming Welford oracle") {
    auto samples = mixture_samples(101, 1000);
    auto s = empirical_stats(samples);

    // single-pass Welford recurrence, an independent route
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t count = 0;
    for (double v : samples) {
        ++count;
        const double delta = v - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (v - mean);
    }
    REQUIRE(s.mu == Approx(mean).margin(1e-9));
    REQUIRE(s.sigma == Approx(std::sqrt(m2 / static_cast<double>(count))).margin(1e-9));
}

TEST_CASE("bound fit: symmetric sample set against the exhaustive oracle") {
    // two copies of {-62..-58} to satisfy the fit's minimum sample count
    std::vector<double> samples{-62, -61, -60, -59, -58, -62, -61, -60, -59, -58};
    const double eps = 0.2;
    auto fitted = fit_asymmetric_bounds(samples, eps);

    const auto inside = count_inside(samples, fitted);
    REQUIRE(static_cast<double>(inside) / static_cast<double>(samples.size()) >= 1.0 - eps);

    auto expect = oracle::fit_exhaustive(samples, eps);
    REQUIRE(expect.feasible);
    REQUIRE(fitted.g_inf == Approx(expect.g_inf).margin(1e-12));
    REQUIRE(fitted.g_sup == Approx(expect.g_sup).margin(1e-12));
}

TEST_CASE("bound fit: constant samples give a degenerate interval") {
    std::vector<double> samples(25, -61.0);
    auto fitted = fit_asymmetric_bounds(samples, 0.3);
    REQUIRE(fitted.g_inf == 0.0);
    REQUIRE(fitted.g_sup == 0.0);
    REQUIRE(fitted.mu == -61.0);
    REQUIRE(apply_filter(samples, fitted).size() == samples.size());
}

TEST_CASE("bound fit: heavy left tail puts more slack below the mean") {
    for (std::uint64_t seed : {5u, 6u, 7u}) {
        auto samples = mixture_samples(seed, 300);
        auto fitted = fit_asymmetric_bounds(samples, 0.05);
        REQUIRE(fitted.g_inf > fitted.g_sup);
    }
}

TEST_CASE("bound fit rejects tiny inputs with the fallback hint") {
    std::vector<double> samples{-60, -61, -62};
    REQUIRE_THROWS_AS(fit_asymmetric_bounds(samples, 0.2), TooFewSamplesError);
    try {
        fit_asymmetric_bounds(samples, 0.2);
    } catch (const TooFewSamplesError& e) {
        REQUIRE(std::string(e.what()).find("3-sigma") != std::string::npos);
    }
}

TEST_CASE("bound fit properties: coverage, minimality, monotonicity in epsilon") {
    std::mt19937 gen(42);
    std::uniform_int_distribution<int> size_dist(10, 200);
    std::uniform_real_distribution<double> eps_dist(0.05, 0.5);
    // coarser grid keeps the per-case work small; passed to both routes
    const double step = 0.05;

    for (int rep = 0; rep < 60; ++rep) {
        auto samples = mixture_samples(1000 + static_cast<std::uint64_t>(rep),
                                       static_cast<std::size_t>(size_dist(gen)));
        const double eps = eps_dist(gen);
        auto fitted = fit_asymmetric_bounds(samples, eps, step);

        const std::size_t need = oracle::required_count(samples.size(), eps);
        REQUIRE(count_inside(samples, fitted) >= need);

        // decreasing either bound by one grid step must break coverage
        if (fitted.g_inf > 0.0) {
            FilterParams tighter = fitted;
            tighter.g_inf -= step;
            REQUIRE(count_inside(samples, tighter) < need);
        }
        if (fitted.g_sup > 0.0) {
            FilterParams tighter = fitted;
            tighter.g_sup -= step;
            REQUIRE(count_inside(samples, tighter) < need);
        }

        // a larger tolerance can only shrink the objective
        const double eps2 = std::min(0.9, eps * 1.5);
        auto looser = fit_asymmetric_bounds(samples, eps2, step);
        REQUIRE(looser.g_inf + looser.g_sup <= fitted.g_inf + fitted.g_sup + 1e-12);
    }
}

TEST_CASE("bound fit agrees with the exhaustive oracle on random mixtures") {
    for (int rep = 0; rep < 10; ++rep) {
        auto samples = mixture_samples(2000 + static_cast<std::uint64_t>(rep), 80);
        const double eps = 0.05 + 0.03 * rep;
        auto fitted = fit_asymmetric_bounds(samples, eps, 0.05);
        auto expect = oracle::fit_exhaustive(samples, eps, 0.05);
        REQUIRE(expect.feasible);
        REQUIRE(fitted.g_inf == Approx(expect.g_inf).margin(1e-12));
        REQUIRE(fitted.g_sup == Approx(expect.g_sup).margin(1e-12));
    }
}

TEST_CASE("apply filter basics") {
    SECTION("cap-wide bounds keep everything") {
        auto samples = mixture_samples(77, 120);
        auto stats = empirical_stats(samples);
        FilterParams wide{kDefaultGMax, kDefaultGMax, 0.05, stats.mu, stats.sigma};
        auto kept = apply_filter(samples, wide);
        REQUIRE(kept == std::vector<double>(samples.begin(), samples.end()));
    }
    SECTION("the -90 outlier is rejected, order preserved") {
        // bounds fitted at eps=0.34 via the unconstrained oracle: the
        // cheapest interval keeps the two -60s and drops the deep fade
        std::vector<double> samples{-60, -60, -90};
        auto fit = oracle::fit_exhaustive(samples, 0.34);
        REQUIRE(fit.feasible);
        FilterParams params{fit.g_inf, fit.g_sup, 0.34, fit.mu, fit.sigma};
        auto kept = apply_filter(samples, params);
        REQUIRE(kept == std::vector<double>{-60, -60});
        REQUIRE(filtered_mean(samples, params) == Approx(-60.0).margin(1e-12));
    }
    SECTION("rejected set matches a scalar scan oracle on a fade-heavy series") {
        auto samples = mixture_samples(78, 400, -62.0, 2.0, 0.25, 16.0, 2.0);
        auto fitted = fit_asymmetric_bounds(samples, 0.1);
        auto kept = apply_filter(samples, fitted);
        auto expected =
            oracle::filter_scan(samples, fitted.mu, fitted.sigma, fitted.g_inf, fitted.g_sup);
        REQUIRE(kept == expected);
        const double m = filtered_mean(samples, fitted);
        REQUIRE(m == Approx(oracle::mean(expected)).margin(1e-9));
    }
}

TEST_CASE("apply filter is idempotent") {
    for (int rep = 0; rep < 20; ++rep) {
        auto samples = mixture_samples(3000 + static_cast<std::uint64_t>(rep), 150);
        auto fitted = fit_asymmetric_bounds(samples, 0.1);
        auto once = apply_filter(samples, fitted);
        auto twice = apply_filter(once, fitted);
        REQUIRE(once == twice);
    }
}

TEST_CASE("filtering is equivariant under positive affine sample transforms") {
    for (int rep = 0; rep < 20; ++rep) {
        auto samples = mixture_samples(4000 + static_cast<std::uint64_t>(rep), 120);
        const double a = 0.5 + 0.3 * rep;
        const double b = 7.25;
        std::vector<double> transformed;
        transformed.reserve(samples.size());
        for (double v : samples) transformed.push_back(a * v + b);

        const double eps = 0.12;
        auto f1 = fit_asymmetric_bounds(samples, eps);
        auto f2 = fit_asymmetric_bounds(transformed, eps);
        REQUIRE(f2.g_inf == Approx(f1.g_inf).margin(1e-9));
        REQUIRE(f2.g_sup == Approx(f1.g_sup).margin(1e-9));
        REQUIRE(f2.mu == Approx(a * f1.mu + b).margin(1e-9));
        REQUIRE(f2.sigma == Approx(a * f1.sigma).margin(1e-9));

        auto k1 = apply_filter(samples, f1);
        auto k2 = apply_filter(transformed, f2);
        REQUIRE(k1.size() == k2.size());
        for (std::size_t i = 0; i < k1.size(); ++i) {
            REQUIRE(k2[i] == Approx(a * k1[i] + b).margin(1e-9));
        }
    }
}

TEST_CASE("filtered mean falls back to mu when nothing is retained") {
    std::vector<double> samples{-60.0, -61.0, -62.0};
    FilterParams params{0.0, 0.0, 0.1, -10.0, 0.0}; // interval is exactly {-10}
    REQUIRE(apply_filter(samples, params).empty());
    REQUIRE(filtered_mean(samples, params) == -10.0);
}
