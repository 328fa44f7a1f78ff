#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "iwknn/filter.hpp"
#include "iwknn/types.hpp"

namespace iwknn {

/// The fingerprint database: reference points with filtered per-AP values,
/// plus the per-(point, AP) filter parameters cached for the online stage.
/// Read-only after construction.
class RadioMap {
public:
    RadioMap(ApRegistry registry, double venue_width, double venue_height)
        : registry_(std::move(registry)), venue_width_(venue_width), venue_height_(venue_height) {}

    const ApRegistry& registry() const { return registry_; }
    double venue_width() const { return venue_width_; }
    double venue_height() const { return venue_height_; }

    std::size_t point_count() const { return points_.size(); }
    std::size_t ap_count() const { return registry_.size(); }
    bool empty() const { return points_.empty(); }

    const std::vector<ReferencePoint>& points() const { return points_; }

    const ReferencePoint& point(int id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= points_.size()) {
            throw std::out_of_range("RadioMap: no reference point with id " + std::to_string(id));
        }
        return points_[static_cast<std::size_t>(id)];
    }

    /// Filter params for (point, ap); nullptr for eliminated entries.
    const FilterParams* params(int point_id, int ap_index) const {
        const auto& slot = params_.at(slot_index(point_id, ap_index));
        return slot ? &*slot : nullptr;
    }

    const std::vector<ProvenanceRecord>& provenance() const { return provenance_; }

    const SelectionThresholds& thresholds() const { return thresholds_; }
    int sample_count() const { return sample_count_; }
    double rssi_min() const { return thresholds_.rssi_min; }
    double grid_pitch() const { return grid_pitch_; }

    // -- construction (used by offline selection and the store loader) --

    void add_point(ReferencePoint point) {
        if (point.id != static_cast<int>(points_.size())) {
            throw std::invalid_argument("RadioMap: point ids must be contiguous from 0");
        }
        if (point.fingerprint.values.size() != registry_.size() ||
            point.fingerprint.registry_id != registry_.id()) {
            throw RegistryMismatchError("RadioMap: fingerprint not bound to map registry");
        }
        if (point.x < 0.0 || point.x > venue_width_ || point.y < 0.0 || point.y > venue_height_) {
            throw std::invalid_argument("RadioMap: point " + std::to_string(point.id) +
                                        " outside venue bounds");
        }
        points_.push_back(std::move(point));
        params_.resize(points_.size() * registry_.size());
    }

    void set_params(int point_id, int ap_index, FilterParams params) {
        params_.at(slot_index(point_id, ap_index)) = params;
    }

    void add_provenance(ProvenanceRecord rec) { provenance_.push_back(rec); }
    void set_thresholds(const SelectionThresholds& t) { thresholds_ = t; }
    void set_sample_count(int s) { sample_count_ = s; }
    void set_grid_pitch(double pitch) { grid_pitch_ = pitch; }

private:
    std::size_t slot_index(int point_id, int ap_index) const {
        if (point_id < 0 || static_cast<std::size_t>(point_id) >= points_.size() ||
            ap_index < 0 || static_cast<std::size_t>(ap_index) >= registry_.size()) {
            throw std::out_of_range("RadioMap: bad (point, ap) index");
        }
        return static_cast<std::size_t>(point_id) * registry_.size() +
               static_cast<std::size_t>(ap_index);
    }

    ApRegistry registry_;
    double venue_width_;
    double venue_height_;
    std::vector<ReferencePoint> points_;
    std::vector<std::optional<FilterParams>> params_; // row-major [point][ap]
    std::vector<ProvenanceRecord> provenance_;
    SelectionThresholds thresholds_;
    int sample_count_ = 0;
    double grid_pitch_ = 0.0;
};

} // namespace iwknn
