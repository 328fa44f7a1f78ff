#pragma once

// Shared builders for the test suites. Algorithmic oracles live in
// oracles.hpp and must stay independent of the library implementations.

#include <cstdio>
#include <string>
#include <vector>

#include "iwknn/iwknn.hpp"

namespace testutil {

inline iwknn::ApRegistry make_registry(std::size_t n) {
    std::vector<std::string> macs;
    macs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        char buf[18];
        std::snprintf(buf, sizeof(buf), "0a:0b:0c:00:%02x:%02x",
                      static_cast<unsigned>((i >> 8) & 0xff), static_cast<unsigned>(i & 0xff));
        macs.emplace_back(buf);
    }
    return iwknn::ApRegistry(std::move(macs));
}

inline iwknn::RssiVector vec(const iwknn::ApRegistry& reg, std::vector<double> values) {
    return iwknn::make_rssi_vector(reg, std::move(values));
}

struct PointSpec {
    double x;
    double y;
    std::vector<double> fingerprint;
};

/// Hand-built map; no filter params unless the test sets them.
inline iwknn::RadioMap make_map(const iwknn::ApRegistry& reg, double width, double height,
                                const std::vector<PointSpec>& specs) {
    iwknn::RadioMap map(reg, width, height);
    int id = 0;
    for (const auto& s : specs) {
        map.add_point(iwknn::ReferencePoint{id++, s.x, s.y,
                                            iwknn::RssiVector{s.fingerprint, reg.id()}});
    }
    return map;
}

/// Uniform-grid map with smooth synthetic fingerprints, for geometry tests.
inline iwknn::RadioMap make_grid_map(const iwknn::ApRegistry& reg, int nx, int ny, double pitch) {
    iwknn::RadioMap map(reg, nx * pitch, ny * pitch);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double x = (i + 0.5) * pitch;
            const double y = (j + 0.5) * pitch;
            std::vector<double> fp;
            fp.reserve(reg.size());
            for (std::size_t n = 0; n < reg.size(); ++n) {
                fp.push_back(-40.0 - 0.5 * x - 0.7 * y - 2.0 * static_cast<double>(n));
            }
            map.add_point(iwknn::ReferencePoint{j * nx + i, x, y,
                                                iwknn::RssiVector{std::move(fp), reg.id()}});
        }
    }
    return map;
}

} // namespace testutil
