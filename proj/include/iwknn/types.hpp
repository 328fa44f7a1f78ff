#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace iwknn {

/// Sentinel substituted when an AP was not detected in a sample.
inline constexpr double kDefaultRssiMin = -100.0;

/// Raised when two vectors bound to different registries (or of different
/// length) meet in one computation.
struct RegistryMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct Coord {
    double x = 0.0;
    double y = 0.0;
};

namespace detail {

// 64-bit FNV-1a, used to derive a stable registry identity from the MAC list.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace detail

/// Sealed, ordered set of access points. The index assigned here fixes the
/// component order of every RssiVector in the system.
class ApRegistry {
public:
    explicit ApRegistry(std::vector<std::string> macs) {
        macs_.reserve(macs.size());
        for (auto& raw : macs) {
            std::string mac = canonical_mac(raw);
            if (index_.count(mac) != 0) {
                throw std::invalid_argument("ApRegistry: duplicate MAC " + mac);
            }
            index_.emplace(mac, macs_.size());
            macs_.push_back(std::move(mac));
        }
        id_ = 0xcbf29ce484222325ull;
        for (const auto& mac : macs_) {
            id_ = detail::fnv1a64(mac, id_);
            id_ = detail::fnv1a64("\n", id_);
        }
    }

    std::size_t size() const { return macs_.size(); }
    const std::string& mac(std::size_t index) const { return macs_.at(index); }
    const std::vector<std::string>& macs() const { return macs_; }

    std::optional<std::size_t> index_of(std::string_view mac) const {
        auto it = index_.find(canonical_mac(mac));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    /// Deterministic digest of the MAC list; equal lists give equal ids.
    std::uint64_t id() const { return id_; }

    /// Normalizes a 48-bit MAC to lowercase colon-separated hex.
    /// Accepts ':' or '-' separators and bare 12-digit hex.
    static std::string canonical_mac(std::string_view raw) {
        std::string digits;
        digits.reserve(12);
        for (char c : raw) {
            if (c == ':' || c == '-') continue;
            if (!std::isxdigit(static_cast<unsigned char>(c))) {
                throw std::invalid_argument("ApRegistry: invalid MAC '" + std::string(raw) + "'");
            }
            digits.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
        if (digits.size() != 12) {
            throw std::invalid_argument("ApRegistry: MAC must have 12 hex digits, got '" +
                                        std::string(raw) + "'");
        }
        std::string out;
        out.reserve(17);
        for (std::size_t i = 0; i < 12; i += 2) {
            if (i != 0) out.push_back(':');
            out.push_back(digits[i]);
            out.push_back(digits[i + 1]);
        }
        return out;
    }

private:
    std::vector<std::string> macs_;
    std::unordered_map<std::string, std::size_t> index_;
    std::uint64_t id_ = 0;
};

/// One time slot's per-AP signal strengths, in registry order.
/// Missing measurements are stored as the configured RSSI_MIN sentinel.
struct RssiVector {
    std::vector<double> values;
    std::uint64_t registry_id = 0;
};

inline RssiVector make_rssi_vector(const ApRegistry& registry, std::vector<double> values) {
    if (values.size() != registry.size()) {
        throw RegistryMismatchError("RssiVector: expected " + std::to_string(registry.size()) +
                                    " entries, got " + std::to_string(values.size()));
    }
    return RssiVector{std::move(values), registry.id()};
}

/// A surveyed location with its stored fingerprint.
struct ReferencePoint {
    int id = 0;
    double x = 0.0;
    double y = 0.0;
    RssiVector fingerprint;
};

/// Output of one locate call.
struct PositionEstimate {
    double x = 0.0;
    double y = 0.0;
    std::vector<int> neighbor_ids;
    std::vector<double> weights; // matches neighbor_ids, nonnegative, sums to 1
    double elapsed_us = 0.0;
};

/// Gates of the offline selection pass.
/// theta1 > 1 disables the loss gate; theta2 = +inf disables the jitter gate.
struct SelectionThresholds {
    double theta1 = 0.3;   // loss-rate threshold
    double theta2 = 2.0;   // jitter peak-average ratio threshold
    double epsilon = 0.05; // allowed rejected mass for the asymmetric filter
    double rssi_min = kDefaultRssiMin;
};

inline void validate(const SelectionThresholds& t) {
    if (!(t.theta1 > 0.0)) throw std::invalid_argument("thresholds: theta1 must be > 0");
    if (!(t.theta2 > 0.0)) throw std::invalid_argument("thresholds: theta2 must be > 0");
    if (!(t.epsilon > 0.0 && t.epsilon < 1.0)) {
        throw std::invalid_argument("thresholds: epsilon must be in (0, 1)");
    }
}

enum class Gate { kLoss, kFluctuation };

inline const char* to_string(Gate g) {
    return g == Gate::kLoss ? "loss" : "fluctuation";
}

/// One eliminated (point, AP) entry and the gate that removed it.
struct ProvenanceRecord {
    int point_id = 0;
    int ap_index = 0;
    Gate gate = Gate::kLoss;
    double statistic = 0.0; // loss rate, or jitter/magnitude ratio
    double threshold = 0.0;
};

} // namespace iwknn
