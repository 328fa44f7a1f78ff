#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "iwknn/fingerprint.hpp"
#include "iwknn/radio_map.hpp"
#include "iwknn/selection.hpp"
#include "iwknn/types.hpp"

namespace iwknn {

enum class Algorithm { kIwknn, kWknn, kKnn };

inline const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::kIwknn: return "iwknn";
        case Algorithm::kWknn: return "wknn";
        default: return "knn";
    }
}

inline std::optional<Algorithm> algorithm_from_string(std::string_view s) {
    if (s == "iwknn") return Algorithm::kIwknn;
    if (s == "wknn") return Algorithm::kWknn;
    if (s == "knn") return Algorithm::kKnn;
    return std::nullopt;
}

struct NoUsableApsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LocatorOptions {
    int k = 5;
    std::size_t window_capacity = 20; // T
    double candidate_radius = 0.0;    // meters; +inf disables restriction
    std::size_t history_depth = 3;    // H
    bool disable_filter = false;      // degeneration switch
    SelectionThresholds thresholds;
};

/// Reference points within `radius` of `center`, expanding the radius by
/// 1.5x until at least `floor_count` points qualify. Empty center (cold
/// start) or an infinite radius selects every point.
inline std::vector<int> candidate_set(const RadioMap& map, std::optional<Coord> center,
                                      double radius, std::size_t floor_count) {
    if (map.empty()) throw std::invalid_argument("candidate_set: empty map");
    std::vector<int> ids;
    if (!center || std::isinf(radius)) {
        ids.reserve(map.point_count());
        for (const auto& p : map.points()) ids.push_back(p.id);
        return ids;
    }
    floor_count = std::min(floor_count, map.point_count());
    double r = radius;
    for (;;) {
        ids.clear();
        const double r2 = r * r;
        for (const auto& p : map.points()) {
            const double dx = p.x - center->x;
            const double dy = p.y - center->y;
            if (dx * dx + dy * dy <= r2) ids.push_back(p.id);
        }
        if (ids.size() >= floor_count) return ids;
        r *= 1.5;
    }
}

/// One tracked user's positioning session: sliding window of query slots,
/// short estimate history for candidate restriction, and the I-WKNN online
/// pipeline. Sessions over the same RadioMap are independent.
class Locator {
public:
    Locator(const RadioMap& map, LocatorOptions options)
        : map_(&map), options_(options), window_(options.window_capacity) {
        if (map.empty()) throw std::invalid_argument("Locator: empty map");
        if (options.k < 1) throw std::invalid_argument("Locator: k must be >= 1");
        if (!(options.candidate_radius > 0.0)) {
            throw std::invalid_argument("Locator: candidate_radius must be > 0");
        }
        validate(options.thresholds);
    }

    const LocatorOptions& options() const { return options_; }
    const OnlineWindow& window() const { return window_; }
    const std::deque<PositionEstimate>& history() const { return history_; }

    void reset() {
        window_.clear();
        history_.clear();
    }

    /// Candidate restriction around the latest estimate; every point on a
    /// cold start. Restriction only engages once the window has filled:
    /// estimates made from a partial window are too loose to center on.
    /// The floor of max(k, 8) candidates guards recovery after a bad
    /// estimate.
    std::vector<int> candidates() const {
        std::optional<Coord> center;
        if (!history_.empty() && window_.size() == window_.capacity()) {
            center = Coord{history_.back().x, history_.back().y};
        }
        const auto floor_count =
            static_cast<std::size_t>(std::max(options_.k, 8));
        return candidate_set(*map_, center, options_.candidate_radius, floor_count);
    }

    /// Full online step: window push, per-AP selection with cached filter
    /// params, candidate-restricted matching, weighted centroid.
    PositionEstimate locate(std::int64_t timestamp_us, const RssiVector& raw_slot) {
        const auto started = std::chrono::steady_clock::now();
        check_registry(raw_slot);
        window_.push(timestamp_us, raw_slot);

        const int anchor = anchor_point_id();
        auto params_for = [&](int ap) { return map_->params(anchor, ap); };
        OnlineSelection sel =
            online_select(window_, options_.thresholds, params_for, options_.disable_filter);

        bool any_usable = false;
        for (double v : sel.query.values) {
            if (v != options_.thresholds.rssi_min) {
                any_usable = true;
                break;
            }
        }
        if (!any_usable) {
            throw NoUsableApsError("locate: no usable APs in the current window");
        }

        const std::vector<int> cands = candidates();
        std::vector<std::pair<int, double>> dists;
        dists.reserve(cands.size());
        for (int id : cands) {
            dists.emplace_back(id, euclidean_distance(map_->point(id).fingerprint, sel.query));
        }
        auto weights = wknn_weights(dists, options_.k);
        const Coord coord = weighted_centroid(weights, map_->points());

        PositionEstimate est;
        est.x = coord.x;
        est.y = coord.y;
        for (const auto& [id, w] : weights) {
            est.neighbor_ids.push_back(id);
            est.weights.push_back(w);
        }
        est.elapsed_us = elapsed_us_since(started);

        history_.push_back(est);
        if (history_.size() > options_.history_depth) history_.pop_front();
        return est;
    }

    /// Comparison baselines: full-map search on the raw slot, no window,
    /// no filtering, no candidate restriction. Does not touch session state.
    PositionEstimate locate_baseline(const RssiVector& raw_slot, Algorithm algorithm) const {
        const auto started = std::chrono::steady_clock::now();
        check_registry(raw_slot);
        PositionEstimate est;
        switch (algorithm) {
            case Algorithm::kKnn:
                est = knn_estimate(raw_slot, *map_, options_.k);
                break;
            case Algorithm::kWknn:
                est = wknn_estimate(raw_slot, *map_, options_.k);
                break;
            default:
                throw std::invalid_argument("locate_baseline: use locate() for iwknn");
        }
        est.elapsed_us = elapsed_us_since(started);
        return est;
    }

private:
    void check_registry(const RssiVector& slot) const {
        if (slot.registry_id != map_->registry().id() ||
            slot.values.size() != map_->registry().size()) {
            throw RegistryMismatchError("locate: query not bound to the map registry");
        }
    }

    static double elapsed_us_since(std::chrono::steady_clock::time_point started) {
        return std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() -
                                                         started)
            .count();
    }

    /// Reference point whose cached filter params drive the online filter:
    /// nearest to the previous estimate, or nearest in RSSI space to the raw
    /// window mean when there is no history yet.
    int anchor_point_id() const {
        if (!history_.empty()) {
            const Coord last{history_.back().x, history_.back().y};
            int best = -1;
            double best_d2 = std::numeric_limits<double>::infinity();
            for (const auto& p : map_->points()) {
                const double dx = p.x - last.x;
                const double dy = p.y - last.y;
                const double d2 = dx * dx + dy * dy;
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = p.id;
                }
            }
            return best;
        }
        // cold start: raw per-AP window mean, sentinels included as-is
        const std::size_t n_count = map_->registry().size();
        RssiVector mean_vec;
        mean_vec.registry_id = map_->registry().id();
        mean_vec.values.assign(n_count, 0.0);
        for (const auto& slot : window_.slots()) {
            for (std::size_t n = 0; n < n_count; ++n) {
                mean_vec.values[n] += slot.rssi.values[n];
            }
        }
        for (std::size_t n = 0; n < n_count; ++n) {
            mean_vec.values[n] /= static_cast<double>(window_.size());
        }
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& p : map_->points()) {
            const double d = euclidean_distance(p.fingerprint, mean_vec);
            if (d < best_d) {
                best_d = d;
                best = p.id;
            }
        }
        return best;
    }

    const RadioMap* map_;
    LocatorOptions options_;
    OnlineWindow window_;
    std::deque<PositionEstimate> history_;
};

} // namespace iwknn
