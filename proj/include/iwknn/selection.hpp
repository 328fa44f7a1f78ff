#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "iwknn/filter.hpp"
#include "iwknn/radio_map.hpp"
#include "iwknn/types.hpp"

namespace iwknn {

/// The S offline samples of one AP at one reference point.
struct RawSampleSeries {
    int point_id = 0;
    int ap_index = 0;
    std::vector<double> samples; // missing measurements stored as rssi_min
};

/// One venue's complete offline collection: registry, geometry, and the
/// M*N raw series.
struct OfflineCampaign {
    ApRegistry registry;
    double venue_width = 0.0;
    double venue_height = 0.0;
    double grid_pitch = 0.0;
    std::vector<Coord> point_coords; // indexed by point id
    int sample_count = 0;            // S, identical across series
    double rssi_min = kDefaultRssiMin;
    std::uint64_t seed = 0;
    std::vector<RawSampleSeries> series;
};

/// Ring buffer of the last T query slots.
class OnlineWindow {
public:
    struct Slot {
        std::int64_t timestamp_us = 0;
        RssiVector rssi;
    };

    explicit OnlineWindow(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw std::invalid_argument("OnlineWindow: capacity must be >= 1");
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return slots_.size(); }
    bool empty() const { return slots_.empty(); }
    const std::deque<Slot>& slots() const { return slots_; }

    void push(std::int64_t timestamp_us, RssiVector rssi) {
        if (!slots_.empty()) {
            if (timestamp_us <= slots_.back().timestamp_us) {
                throw std::invalid_argument("OnlineWindow: timestamps must be strictly increasing");
            }
            if (rssi.registry_id != slots_.back().rssi.registry_id ||
                rssi.values.size() != slots_.back().rssi.values.size()) {
                throw RegistryMismatchError("OnlineWindow: slot bound to a different registry");
            }
        }
        slots_.push_back(Slot{timestamp_us, std::move(rssi)});
        if (slots_.size() > capacity_) slots_.pop_front();
    }

    void clear() { slots_.clear(); }

private:
    std::size_t capacity_;
    std::deque<Slot> slots_;
};

/// Fraction of entries equal to the missing-signal sentinel.
inline double loss_rate(std::span<const double> series, double rssi_min) {
    if (series.empty()) throw std::invalid_argument("loss_rate: empty series");
    std::size_t missing = 0;
    for (double v : series) {
        if (v == rssi_min) ++missing;
    }
    return static_cast<double>(missing) / static_cast<double>(series.size());
}

namespace detail {

// jitter magnitude J = S' * sqrt(sum((r_i - mean)^2)) and signal magnitude
// L = sum(|r_i|) of a missing-excluded series; gate fires when J >= theta2*L.
inline std::pair<double, double> fluctuation_stats(std::span<const double> received) {
    const auto n = static_cast<double>(received.size());
    double sum = 0.0;
    double abs_sum = 0.0;
    for (double v : received) {
        sum += v;
        abs_sum += std::abs(v);
    }
    const double mean = sum / n;
    double sq = 0.0;
    for (double v : received) sq += (v - mean) * (v - mean);
    return {n * std::sqrt(sq), abs_sum};
}

} // namespace detail

/// Jitter gate over the received (missing-excluded) sub-series.
inline bool fluctuation_excessive(std::span<const double> received, double theta2) {
    if (received.empty()) throw std::invalid_argument("fluctuation_excessive: empty series");
    auto [jitter, magnitude] = detail::fluctuation_stats(received);
    return jitter >= theta2 * magnitude;
}

/// Tuning for the offline bound fit. disable_filter skips the asymmetric
/// filter entirely (entries become plain means, params pinned at the cap);
/// used by the degeneration checks.
struct FitOptions {
    double grid_step = kDefaultGridStep;
    double g_max = kDefaultGMax;
    bool disable_filter = false;
};

/// Offline selection pass: loss gate, jitter gate, then asymmetric
/// filtering; builds the radio map with per-entry filter params and a
/// provenance record for every eliminated entry.
///
/// Series with fewer received samples than the fit minimum fall back to
/// symmetric 3-sigma bounds. Deterministic: identical campaigns and
/// thresholds produce identical maps.
inline RadioMap offline_select(const OfflineCampaign& campaign,
                               const SelectionThresholds& thresholds,
                               const FitOptions& fit = {}) {
    validate(thresholds);
    const std::size_t m_count = campaign.point_coords.size();
    const std::size_t n_count = campaign.registry.size();

    // index the series and fail loudly on gaps
    std::vector<const RawSampleSeries*> by_slot(m_count * n_count, nullptr);
    for (const auto& s : campaign.series) {
        if (s.point_id < 0 || static_cast<std::size_t>(s.point_id) >= m_count ||
            s.ap_index < 0 || static_cast<std::size_t>(s.ap_index) >= n_count) {
            throw std::invalid_argument("offline_select: series (" + std::to_string(s.point_id) +
                                        ", " + std::to_string(s.ap_index) + ") out of range");
        }
        if (s.samples.size() != static_cast<std::size_t>(campaign.sample_count)) {
            throw std::invalid_argument("offline_select: series (" + std::to_string(s.point_id) +
                                        ", " + std::to_string(s.ap_index) + ") has " +
                                        std::to_string(s.samples.size()) + " samples, expected " +
                                        std::to_string(campaign.sample_count));
        }
        by_slot[static_cast<std::size_t>(s.point_id) * n_count +
                static_cast<std::size_t>(s.ap_index)] = &s;
    }
    for (std::size_t m = 0; m < m_count; ++m) {
        for (std::size_t n = 0; n < n_count; ++n) {
            if (by_slot[m * n_count + n] == nullptr) {
                throw std::invalid_argument("offline_select: missing series for point " +
                                            std::to_string(m) + ", ap " + std::to_string(n));
            }
        }
    }

    RadioMap map(campaign.registry, campaign.venue_width, campaign.venue_height);
    map.set_thresholds(thresholds);
    map.set_sample_count(campaign.sample_count);
    map.set_grid_pitch(campaign.grid_pitch);

    struct Fitted {
        int ap = 0;
        FilterParams params;
    };

    for (std::size_t m = 0; m < m_count; ++m) {
        std::vector<double> entries(n_count, thresholds.rssi_min);
        std::vector<Fitted> fitted;
        for (std::size_t n = 0; n < n_count; ++n) {
            const RawSampleSeries& s = *by_slot[m * n_count + n];
            const double loss = loss_rate(s.samples, thresholds.rssi_min);

            std::vector<double> received;
            received.reserve(s.samples.size());
            for (double v : s.samples) {
                if (v != thresholds.rssi_min) received.push_back(v);
            }

            if (loss >= thresholds.theta1 || received.empty()) {
                map.add_provenance({static_cast<int>(m), static_cast<int>(n), Gate::kLoss, loss,
                                    thresholds.theta1});
                continue;
            }
            auto [jitter, magnitude] = detail::fluctuation_stats(received);
            if (jitter >= thresholds.theta2 * magnitude) {
                map.add_provenance({static_cast<int>(m), static_cast<int>(n), Gate::kFluctuation,
                                    magnitude > 0.0 ? jitter / magnitude : jitter,
                                    thresholds.theta2});
                continue;
            }

            if (fit.disable_filter) {
                const SampleStats stats = empirical_stats(received);
                entries[n] = stats.mu;
                fitted.push_back({static_cast<int>(n),
                                  FilterParams{fit.g_max, fit.g_max, thresholds.epsilon, stats.mu,
                                               stats.sigma}});
                continue;
            }

            FilterParams params;
            if (received.size() < kMinFitSamples) {
                const SampleStats stats = empirical_stats(received);
                params = FilterParams{3.0, 3.0, thresholds.epsilon, stats.mu, stats.sigma};
            } else {
                params = fit_asymmetric_bounds(received, thresholds.epsilon, fit.grid_step,
                                               fit.g_max);
            }
            entries[n] = filtered_mean(received, params);
            fitted.push_back({static_cast<int>(n), params});
        }

        map.add_point(ReferencePoint{static_cast<int>(m), campaign.point_coords[m].x,
                                     campaign.point_coords[m].y,
                                     RssiVector{std::move(entries), campaign.registry.id()}});
        for (const auto& f : fitted) {
            map.set_params(static_cast<int>(m), f.ap, f.params);
        }
    }
    return map;
}

/// Result of the online per-AP selection over one window snapshot.
struct OnlineSelection {
    RssiVector query;
    int abandoned = 0;  // APs emitted as the sentinel (loss gate or no data)
    int unfiltered = 0; // APs averaged without filter params
};

/// Online selection: per AP, abandon on missing fraction >= theta1,
/// otherwise average the received samples retained by the cached offline
/// filter interval. Output for AP n depends only on AP n's window column.
///
/// params_for maps an AP index to the cached offline params of the caller's
/// chosen reference point (nullptr when none are stored); without params the
/// AP falls back to the plain window mean, as it does when the interval
/// rejects every sample.
inline OnlineSelection online_select(
    const OnlineWindow& window, const SelectionThresholds& thresholds,
    const std::function<const FilterParams*(int ap_index)>& params_for,
    bool disable_filter = false) {
    if (window.empty()) throw std::invalid_argument("online_select: empty window");
    const std::size_t n_count = window.slots().front().rssi.values.size();
    const auto slot_count = static_cast<double>(window.size());

    OnlineSelection out;
    out.query.registry_id = window.slots().front().rssi.registry_id;
    out.query.values.assign(n_count, thresholds.rssi_min);

    std::vector<double> received;
    received.reserve(window.size());
    for (std::size_t n = 0; n < n_count; ++n) {
        received.clear();
        std::size_t missing = 0;
        for (const auto& slot : window.slots()) {
            const double v = slot.rssi.values[n];
            if (v == thresholds.rssi_min) {
                ++missing;
            } else {
                received.push_back(v);
            }
        }
        if (static_cast<double>(missing) / slot_count >= thresholds.theta1 || received.empty()) {
            ++out.abandoned;
            continue; // abandoned: sentinel stays in place
        }

        auto mean_of = [](const std::vector<double>& v) {
            double sum = 0.0;
            for (double x : v) sum += x;
            return sum / static_cast<double>(v.size());
        };

        if (disable_filter) {
            out.query.values[n] = mean_of(received);
            continue;
        }
        const FilterParams* params = params_for ? params_for(static_cast<int>(n)) : nullptr;
        if (params == nullptr) {
            ++out.unfiltered;
            out.query.values[n] = mean_of(received);
            continue;
        }
        std::vector<double> retained = apply_filter(received, *params);
        if (retained.empty()) {
            ++out.unfiltered;
            out.query.values[n] = mean_of(received);
        } else {
            out.query.values[n] = mean_of(retained);
        }
    }
    return out;
}

} // namespace iwknn
