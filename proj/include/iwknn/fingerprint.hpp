#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "iwknn/radio_map.hpp"
#include "iwknn/types.hpp"

namespace iwknn {

/// 2-norm of the elementwise difference between two RSSI vectors.
/// Missing entries must already hold the RSSI_MIN sentinel.
inline double euclidean_distance(const RssiVector& fingerprint, const RssiVector& query) {
    if (fingerprint.registry_id != query.registry_id) {
        throw RegistryMismatchError("euclidean_distance: vectors bound to different registries");
    }
    if (fingerprint.values.size() != query.values.size()) {
        throw RegistryMismatchError("euclidean_distance: vector length mismatch");
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < fingerprint.values.size(); ++i) {
        const double d = fingerprint.values[i] - query.values[i];
        sq += d * d;
    }
    return std::sqrt(sq);
}

/// Inverse-squared-distance weights over the k nearest candidates.
///
/// Ties on distance keep the smaller ref_id. Candidates at distance exactly
/// zero absorb all the weight (split equally among them). With fewer than k
/// candidates the whole list is used. Output pairs are ordered by
/// (distance, ref_id); omitted candidates have weight zero.
inline std::vector<std::pair<int, double>> wknn_weights(
    std::span<const std::pair<int, double>> distances, int k) {
    if (distances.empty()) throw std::invalid_argument("wknn_weights: empty candidate list");
    if (k < 1) throw std::invalid_argument("wknn_weights: k must be >= 1");

    std::vector<std::pair<int, double>> order(distances.begin(), distances.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second < b.second;
        return a.first < b.first;
    });
    const std::size_t take = std::min<std::size_t>(order.size(), static_cast<std::size_t>(k));
    order.resize(take);

    std::size_t zeros = 0;
    for (const auto& [id, d] : order) {
        if (d == 0.0) ++zeros;
    }

    std::vector<std::pair<int, double>> weights;
    weights.reserve(take);
    if (zeros > 0) {
        // singular limit: exact matches take all the weight
        for (const auto& [id, d] : order) {
            weights.emplace_back(id, d == 0.0 ? 1.0 / static_cast<double>(zeros) : 0.0);
        }
        return weights;
    }
    double inv_sum = 0.0;
    for (const auto& [id, d] : order) inv_sum += 1.0 / (d * d);
    for (const auto& [id, d] : order) {
        weights.emplace_back(id, (1.0 / (d * d)) / inv_sum);
    }
    return weights;
}

/// Weighted sum of reference-point coordinates. Points are looked up by id
/// in a list sorted by id (as RadioMap stores them).
inline Coord weighted_centroid(std::span<const std::pair<int, double>> weights,
                               std::span<const ReferencePoint> points) {
    double total = 0.0;
    for (const auto& [id, w] : weights) total += w;
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("weighted_centroid: weights sum to " + std::to_string(total));
    }
    auto find_point = [&](int id) -> const ReferencePoint& {
        auto it = std::lower_bound(points.begin(), points.end(), id,
                                   [](const ReferencePoint& p, int v) { return p.id < v; });
        if (it == points.end() || it->id != id) {
            throw std::invalid_argument("weighted_centroid: unknown ref_id " + std::to_string(id));
        }
        return *it;
    };
    Coord c;
    for (const auto& [id, w] : weights) {
        const ReferencePoint& p = find_point(id);
        c.x += w * p.x;
        c.y += w * p.y;
    }
    return c;
}

namespace detail {

inline std::vector<std::pair<int, double>> distances_to_all(const RadioMap& map,
                                                            const RssiVector& query) {
    std::vector<std::pair<int, double>> out;
    out.reserve(map.point_count());
    for (const auto& p : map.points()) {
        out.emplace_back(p.id, euclidean_distance(p.fingerprint, query));
    }
    return out;
}

} // namespace detail

/// Plain k-nearest-neighbor estimate: equal-weight mean of the k nearest
/// reference points' coordinates. Elapsed time is left for the caller.
inline PositionEstimate knn_estimate(const RssiVector& query, const RadioMap& map, int k) {
    if (map.empty()) throw std::invalid_argument("knn_estimate: empty map");
    if (k < 1) throw std::invalid_argument("knn_estimate: k must be >= 1");
    auto dists = detail::distances_to_all(map, query);
    std::sort(dists.begin(), dists.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second < b.second;
        return a.first < b.first;
    });
    const std::size_t take = std::min<std::size_t>(dists.size(), static_cast<std::size_t>(k));

    PositionEstimate est;
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < take; ++i) {
        const ReferencePoint& p = map.point(dists[i].first);
        sx += p.x;
        sy += p.y;
        est.neighbor_ids.push_back(p.id);
        est.weights.push_back(1.0 / static_cast<double>(take));
    }
    est.x = sx / static_cast<double>(take);
    est.y = sy / static_cast<double>(take);
    return est;
}

/// Inverse-squared-distance weighted estimate over the whole map.
inline PositionEstimate wknn_estimate(const RssiVector& query, const RadioMap& map, int k) {
    if (map.empty()) throw std::invalid_argument("wknn_estimate: empty map");
    auto dists = detail::distances_to_all(map, query);
    auto weights = wknn_weights(dists, k);
    Coord c = weighted_centroid(weights, map.points());

    PositionEstimate est;
    est.x = c.x;
    est.y = c.y;
    for (const auto& [id, w] : weights) {
        est.neighbor_ids.push_back(id);
        est.weights.push_back(w);
    }
    return est;
}

} // namespace iwknn
