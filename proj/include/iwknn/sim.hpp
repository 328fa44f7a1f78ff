#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "iwknn/selection.hpp"
#include "iwknn/types.hpp"

namespace iwknn {

/// Fixed transmitter: position and nominal power at the reference distance.
struct ApSite {
    double x = 0.0;
    double y = 0.0;
    double tx_power_dbm = -30.0;
};

/// Rectangular venue with a uniform reference-point grid and fixed APs.
struct VenueLayout {
    double width = 50.0;
    double height = 30.0;
    double grid_pitch = 2.45;
    std::vector<ApSite> aps;

    int grid_nx() const { return static_cast<int>(width / grid_pitch); }
    int grid_ny() const { return static_cast<int>(height / grid_pitch); }
    int point_count() const { return grid_nx() * grid_ny(); }

    /// Cell centers, row-major from the origin corner.
    Coord point_coord(int m) const {
        const int nx = grid_nx();
        if (m < 0 || m >= point_count()) {
            throw std::out_of_range("VenueLayout: bad point id " + std::to_string(m));
        }
        const int i = m % nx;
        const int j = m / nx;
        return Coord{(i + 0.5) * grid_pitch, (j + 0.5) * grid_pitch};
    }

    /// Synthesized locally-administered MACs, one per AP, in AP order.
    ApRegistry make_registry() const {
        std::vector<std::string> macs;
        macs.reserve(aps.size());
        for (std::size_t n = 0; n < aps.size(); ++n) {
            char buf[18];
            std::snprintf(buf, sizeof(buf), "02:00:00:00:%02x:%02x",
                          static_cast<unsigned>((n >> 8) & 0xff), static_cast<unsigned>(n & 0xff));
            macs.emplace_back(buf);
        }
        return ApRegistry(std::move(macs));
    }
};

/// APs on an inset ellipse ring at golden-angle spacing with alternating
/// ring radii. The irregular placement avoids rotational symmetry, which
/// would make fingerprints at mirrored positions near-identical and leave
/// the matcher with ambiguous basins.
inline VenueLayout make_layout(double width, double height, double grid_pitch, int ap_count,
                               double tx_power_dbm = -30.0) {
    if (!(width > 0.0 && height > 0.0 && grid_pitch > 0.0)) {
        throw std::invalid_argument("make_layout: dimensions and pitch must be > 0");
    }
    if (ap_count < 1) throw std::invalid_argument("make_layout: need at least one AP");
    VenueLayout layout;
    layout.width = width;
    layout.height = height;
    layout.grid_pitch = grid_pitch;
    layout.aps.reserve(static_cast<std::size_t>(ap_count));
    constexpr double kGoldenAngle = 2.399963229728653;
    for (int n = 0; n < ap_count; ++n) {
        const double angle = kGoldenAngle * n;
        const double radial = n % 2 == 0 ? 0.46 : 0.34;
        layout.aps.push_back(ApSite{width * (0.5 + radial * std::cos(angle)),
                                    height * (0.5 + radial * std::sin(angle)), tx_power_dbm});
    }
    return layout;
}

/// 240-point, 10-AP hall mirroring the evaluation scale.
inline VenueLayout default_stadium_layout() { return make_layout(50.0, 30.0, 2.45, 10); }

/// Mixture noise: Gaussian fast variation, dropout, and deep fades — the
/// double-peak behavior of crowded-venue RSSI. Defaults are calibrated so
/// the raw-slot WKNN baseline lands in the low-meter error regime on the
/// default venue; they are a tuning point, not physics.
struct NoiseModel {
    double sigma_dbm = 2.0;
    double p_loss = 0.005;
    double p_fade = 0.10;
    double fade_depth_dbm = 5.0;
    double fade_sigma_dbm = 1.5;
};

inline void validate(const NoiseModel& m) {
    if (m.p_loss < 0.0 || m.p_loss > 1.0 || m.p_fade < 0.0 || m.p_fade > 1.0 ||
        m.p_loss + m.p_fade > 1.0) {
        throw std::invalid_argument("NoiseModel: probabilities must be in [0,1], sum <= 1");
    }
    if (m.sigma_dbm < 0.0 || m.fade_depth_dbm < 0.0 || m.fade_sigma_dbm < 0.0) {
        throw std::invalid_argument("NoiseModel: sigma and depth must be >= 0");
    }
}

/// Log-distance path loss, clamped below the reference distance.
inline double path_loss_rssi(const ApSite& ap, Coord pos, double exponent = 2.4,
                             double d0 = 1.0) {
    const double dx = ap.x - pos.x;
    const double dy = ap.y - pos.y;
    const double d = std::max(std::sqrt(dx * dx + dy * dy), d0);
    return ap.tx_power_dbm - 10.0 * exponent * std::log10(d / d0);
}

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ull;
    x ^= x >> 33;
    return x;
}

} // namespace detail

/// Independent substream per (seed, a, b); generation order of the series
/// therefore never affects the output.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = detail::mix64(seed + 0x9e3779b97f4a7c15ull);
    h = detail::mix64(h ^ (a + 0x517cc1b727220a95ull));
    h = detail::mix64(h ^ (b + 0x2545f4914f6cdd1dull));
    return h;
}

/// Deterministic generator: splitmix64 state with an explicit Box-Muller
/// transform, so identical seeds give identical draws on any build of the
/// same platform.
class SampleRng {
public:
    explicit SampleRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double gaussian(double mean, double sigma) {
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

/// One noisy draw; nullopt when the sample is lost. Values clamp to [-100, 0].
inline std::optional<double> sample_rssi(double mean, const NoiseModel& model, SampleRng& rng) {
    if (rng.uniform() < model.p_loss) return std::nullopt;
    double v;
    if (rng.uniform() < model.p_fade) {
        v = rng.gaussian(mean - model.fade_depth_dbm, model.fade_sigma_dbm);
    } else {
        v = rng.gaussian(mean, model.sigma_dbm);
    }
    return std::clamp(v, -100.0, 0.0);
}

struct PathLossModel {
    double exponent = 2.4;
    double d0 = 1.0;
};

// substream tags keeping campaign, trajectory and stream draws disjoint
inline constexpr std::uint64_t kTrajectoryTag = 0x54524a00ull << 16;
inline constexpr std::uint64_t kStreamTag = 0x53545200ull << 16;

/// Full offline collection: S draws for every (point, AP) pair, each pair on
/// its own substream.
inline OfflineCampaign generate_offline_campaign(const VenueLayout& layout,
                                                 const NoiseModel& model, int sample_count,
                                                 std::uint64_t seed,
                                                 double rssi_min = kDefaultRssiMin,
                                                 const PathLossModel& path = {}) {
    validate(model);
    if (sample_count < 1) throw std::invalid_argument("campaign: sample_count must be >= 1");
    OfflineCampaign campaign{layout.make_registry(), layout.width, layout.height,
                             layout.grid_pitch,      {},           sample_count,
                             rssi_min,               seed,         {}};
    const int m_count = layout.point_count();
    const int n_count = static_cast<int>(layout.aps.size());
    campaign.point_coords.reserve(static_cast<std::size_t>(m_count));
    for (int m = 0; m < m_count; ++m) campaign.point_coords.push_back(layout.point_coord(m));

    campaign.series.reserve(static_cast<std::size_t>(m_count) * n_count);
    for (int m = 0; m < m_count; ++m) {
        const Coord pos = layout.point_coord(m);
        for (int n = 0; n < n_count; ++n) {
            const double mean = path_loss_rssi(layout.aps[static_cast<std::size_t>(n)], pos,
                                               path.exponent, path.d0);
            SampleRng rng(substream_seed(seed, static_cast<std::uint64_t>(m),
                                         static_cast<std::uint64_t>(n)));
            RawSampleSeries series{m, n, {}};
            series.samples.reserve(static_cast<std::size_t>(sample_count));
            for (int s = 0; s < sample_count; ++s) {
                const auto v = sample_rssi(mean, model, rng);
                series.samples.push_back(v ? *v : rssi_min);
            }
            campaign.series.push_back(std::move(series));
        }
    }
    return campaign;
}

/// Timestamped ground-truth path sampled at the query rate.
struct Trajectory {
    double speed_mps = 3.0;
    double slot_dt_s = 0.02;
    std::vector<std::pair<std::int64_t, Coord>> waypoints; // (timestamp_us, position)
};

/// Constant-speed piecewise-linear wander between random targets inside the
/// venue. Consecutive displacement never exceeds speed * dt.
inline Trajectory random_trajectory(const VenueLayout& layout, double speed_mps, double slot_dt_s,
                                    int slot_count, std::uint64_t seed) {
    if (slot_count < 1) throw std::invalid_argument("trajectory: slot_count must be >= 1");
    if (!(speed_mps > 0.0 && slot_dt_s > 0.0)) {
        throw std::invalid_argument("trajectory: speed and dt must be > 0");
    }
    SampleRng rng(substream_seed(seed, kTrajectoryTag, 0));
    auto random_point = [&] {
        return Coord{rng.uniform() * layout.width, rng.uniform() * layout.height};
    };

    Trajectory traj{speed_mps, slot_dt_s, {}};
    traj.waypoints.reserve(static_cast<std::size_t>(slot_count));
    Coord pos = random_point();
    Coord target = random_point();
    const double step = speed_mps * slot_dt_s;
    for (int i = 0; i < slot_count; ++i) {
        traj.waypoints.emplace_back(static_cast<std::int64_t>(i) *
                                        static_cast<std::int64_t>(slot_dt_s * 1e6),
                                    pos);
        double remaining = step;
        while (remaining > 0.0) {
            const double dx = target.x - pos.x;
            const double dy = target.y - pos.y;
            const double dist = std::sqrt(dx * dx + dy * dy);
            if (dist <= remaining) {
                pos = target;
                remaining -= dist;
                target = random_point();
            } else {
                pos.x += dx / dist * remaining;
                pos.y += dy / dist * remaining;
                remaining = 0.0;
            }
        }
    }
    return traj;
}

struct StreamSlot {
    std::int64_t timestamp_us = 0;
    Coord truth;
    RssiVector rssi;
};

/// Online evaluation feed with ground truth.
struct OnlineStream {
    ApRegistry registry;
    double rssi_min = kDefaultRssiMin;
    double speed_mps = 0.0;
    double slot_dt_s = 0.0;
    std::uint64_t seed = 0;
    std::vector<StreamSlot> slots;
};

/// One RssiVector per waypoint, every AP drawn from a per-(slot, AP)
/// substream disjoint from the campaign's.
inline OnlineStream generate_online_stream(const VenueLayout& layout, const NoiseModel& model,
                                           const Trajectory& trajectory, std::uint64_t seed,
                                           double rssi_min = kDefaultRssiMin,
                                           const PathLossModel& path = {}) {
    validate(model);
    OnlineStream stream{layout.make_registry(), rssi_min,
                        trajectory.speed_mps,   trajectory.slot_dt_s,
                        seed,                   {}};
    const auto registry_id = stream.registry.id();
    const int n_count = static_cast<int>(layout.aps.size());
    stream.slots.reserve(trajectory.waypoints.size());
    for (std::size_t i = 0; i < trajectory.waypoints.size(); ++i) {
        const auto& [ts, truth] = trajectory.waypoints[i];
        StreamSlot slot{ts, truth, RssiVector{{}, registry_id}};
        slot.rssi.values.reserve(static_cast<std::size_t>(n_count));
        for (int n = 0; n < n_count; ++n) {
            const double mean = path_loss_rssi(layout.aps[static_cast<std::size_t>(n)], truth,
                                               path.exponent, path.d0);
            SampleRng rng(substream_seed(seed, kStreamTag + i, static_cast<std::uint64_t>(n)));
            const auto v = sample_rssi(mean, model, rng);
            slot.rssi.values.push_back(v ? *v : rssi_min);
        }
        stream.slots.push_back(std::move(slot));
    }
    return stream;
}

} // namespace iwknn
