#pragma once

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "iwknn/locator.hpp"
#include "iwknn/radio_map.hpp"
#include "iwknn/selection.hpp"
#include "iwknn/sim.hpp"
#include "iwknn/types.hpp"

namespace iwknn {

inline constexpr int kStoreFormatVersion = 1;

struct StoreVersionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StoreTruncatedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StoreCountError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StoreParseError : std::runtime_error {
    StoreParseError(const std::string& origin, std::size_t line, const std::string& what)
        : std::runtime_error(origin + ":" + std::to_string(line) + ": " + what),
          line_number(line) {}
    std::size_t line_number;
};

namespace storefmt {

/// 9-significant-digit rendering. Parsing what this prints and printing it
/// again is a fixpoint, which is what makes saved files diff-stable.
inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline std::string num(std::int64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%" PRId64, v);
    return buf;
}

inline std::string num(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%" PRIu64, v);
    return buf;
}

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const auto next = line.find(sep, pos);
        if (next == std::string_view::npos) {
            out.emplace_back(line.substr(pos));
            return out;
        }
        out.emplace_back(line.substr(pos, next - pos));
        pos = next + 1;
    }
}

// line-oriented reader that keeps the current line number for diagnostics
class Reader {
public:
    Reader(std::istream& in, std::string origin) : in_(in), origin_(std::move(origin)) {}

    std::optional<std::string> next_line() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            return line;
        }
        return std::nullopt;
    }

    std::size_t line_number() const { return line_no_; }
    const std::string& origin() const { return origin_; }

    [[noreturn]] void fail(const std::string& what) const {
        throw StoreParseError(origin_, line_no_, what);
    }

    double parse_double(const std::string& field) const {
        char* end = nullptr;
        const double v = std::strtod(field.c_str(), &end);
        if (end == field.c_str() || *end != '\0') fail("bad numeric field '" + field + "'");
        return v;
    }

    std::int64_t parse_int(const std::string& field) const {
        char* end = nullptr;
        const long long v = std::strtoll(field.c_str(), &end, 10);
        if (end == field.c_str() || *end != '\0') fail("bad integer field '" + field + "'");
        return v;
    }

    std::uint64_t parse_uint(const std::string& field) const {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(field.c_str(), &end, 10);
        if (end == field.c_str() || *end != '\0') fail("bad integer field '" + field + "'");
        return v;
    }

private:
    std::istream& in_;
    std::string origin_;
    std::size_t line_no_ = 0;
};

struct Header {
    std::map<std::string, std::string> entries;
    std::size_t consumed_lines = 0;

    const std::string& required(const Reader& reader, const std::string& key) const {
        auto it = entries.find(key);
        if (it == entries.end()) {
            throw StoreTruncatedError(reader.origin() + ": missing header key '" + key + "'");
        }
        return it->second;
    }
};

// reads the leading "#HEADER key=value" block; returns the first data line
inline std::pair<Header, std::optional<std::string>> read_header(Reader& reader,
                                                                 std::string_view expected_kind) {
    Header header;
    std::optional<std::string> line;
    while ((line = reader.next_line())) {
        if (line->rfind("#HEADER ", 0) != 0) break;
        const std::string_view body = std::string_view(*line).substr(8);
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) reader.fail("header line without '='");
        header.entries.emplace(std::string(body.substr(0, eq)), std::string(body.substr(eq + 1)));
    }
    if (header.entries.empty()) {
        throw StoreTruncatedError(reader.origin() + ": no header block");
    }
    const std::string& version = header.required(reader, "format_version");
    if (version != std::to_string(kStoreFormatVersion)) {
        throw StoreVersionError(reader.origin() + ": unsupported format_version " + version);
    }
    const std::string& kind = header.required(reader, "kind");
    if (kind != expected_kind) {
        throw StoreVersionError(reader.origin() + ": expected kind=" + std::string(expected_kind) +
                                ", found kind=" + kind);
    }
    return {std::move(header), std::move(line)};
}

inline ApRegistry registry_from_header(const Reader& reader, const Header& header,
                                       std::size_t ap_count) {
    std::vector<std::string> macs;
    macs.reserve(ap_count);
    for (std::size_t n = 0; n < ap_count; ++n) {
        macs.push_back(header.required(reader, "mac_" + std::to_string(n)));
    }
    return ApRegistry(std::move(macs));
}

} // namespace storefmt

// ---------------------------------------------------------------------------
// radio map
// ---------------------------------------------------------------------------

inline void save_radiomap(const RadioMap& map, std::ostream& out) {
    using storefmt::num;
    const auto& t = map.thresholds();
    out << "#HEADER format_version=" << kStoreFormatVersion << "\n";
    out << "#HEADER kind=radiomap\n";
    out << "#HEADER venue_width=" << num(map.venue_width()) << "\n";
    out << "#HEADER venue_height=" << num(map.venue_height()) << "\n";
    out << "#HEADER grid_pitch=" << num(map.grid_pitch()) << "\n";
    out << "#HEADER point_count=" << map.point_count() << "\n";
    out << "#HEADER ap_count=" << map.ap_count() << "\n";
    out << "#HEADER sample_count=" << map.sample_count() << "\n";
    out << "#HEADER theta1=" << num(t.theta1) << "\n";
    out << "#HEADER theta2=" << num(t.theta2) << "\n";
    out << "#HEADER epsilon=" << num(t.epsilon) << "\n";
    out << "#HEADER rssi_min=" << num(t.rssi_min) << "\n";
    for (std::size_t n = 0; n < map.ap_count(); ++n) {
        out << "#HEADER mac_" << n << "=" << map.registry().mac(n) << "\n";
    }
    for (const auto& p : map.points()) {
        for (std::size_t n = 0; n < map.ap_count(); ++n) {
            out << "FP," << p.id << "," << num(p.x) << "," << num(p.y) << "," << n << ","
                << num(p.fingerprint.values[n]) << "\n";
        }
    }
    for (const auto& p : map.points()) {
        for (std::size_t n = 0; n < map.ap_count(); ++n) {
            const FilterParams* fp = map.params(p.id, static_cast<int>(n));
            if (fp == nullptr) continue;
            out << "FILT," << p.id << "," << n << "," << num(fp->mu) << "," << num(fp->sigma)
                << "," << num(fp->g_inf) << "," << num(fp->g_sup) << "," << num(fp->epsilon)
                << "\n";
        }
    }
    for (const auto& rec : map.provenance()) {
        out << "PROV," << rec.point_id << "," << rec.ap_index << "," << to_string(rec.gate) << ","
            << num(rec.statistic) << "," << num(rec.threshold) << "\n";
    }
}

inline void save_radiomap(const RadioMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    save_radiomap(map, out);
    if (!out.flush()) throw std::runtime_error("write failed for " + path);
}

inline RadioMap load_radiomap(std::istream& in, const std::string& origin = "<radiomap>") {
    storefmt::Reader reader(in, origin);
    auto [header, first_line] = storefmt::read_header(reader, "radiomap");

    const auto point_count =
        static_cast<std::size_t>(reader.parse_int(header.required(reader, "point_count")));
    const auto ap_count =
        static_cast<std::size_t>(reader.parse_int(header.required(reader, "ap_count")));
    SelectionThresholds thresholds;
    thresholds.theta1 = reader.parse_double(header.required(reader, "theta1"));
    thresholds.theta2 = reader.parse_double(header.required(reader, "theta2"));
    thresholds.epsilon = reader.parse_double(header.required(reader, "epsilon"));
    thresholds.rssi_min = reader.parse_double(header.required(reader, "rssi_min"));

    RadioMap map(storefmt::registry_from_header(reader, header, ap_count),
                 reader.parse_double(header.required(reader, "venue_width")),
                 reader.parse_double(header.required(reader, "venue_height")));
    map.set_thresholds(thresholds);
    map.set_sample_count(
        static_cast<int>(reader.parse_int(header.required(reader, "sample_count"))));
    map.set_grid_pitch(reader.parse_double(header.required(reader, "grid_pitch")));

    // FP lines arrive point-major; assemble one point at a time
    std::size_t fp_seen = 0;
    int current_point = -1;
    Coord current_coord;
    std::vector<double> current_values;
    auto flush_point = [&] {
        if (current_point < 0) return;
        if (current_values.size() != ap_count) {
            throw StoreTruncatedError(origin + ": point " + std::to_string(current_point) +
                                      " has " + std::to_string(current_values.size()) + " of " +
                                      std::to_string(ap_count) + " fingerprint entries");
        }
        map.add_point(ReferencePoint{current_point, current_coord.x, current_coord.y,
                                     RssiVector{current_values, map.registry().id()}});
        current_values.clear();
    };

    struct PendingParams {
        int m;
        int n;
        FilterParams params;
    };
    std::vector<PendingParams> pending_params;
    std::vector<ProvenanceRecord> provenance;

    std::optional<std::string> line = std::move(first_line);
    for (; line; line = reader.next_line()) {
        auto fields = storefmt::split(*line, ',');
        if (fields[0] == "FP") {
            if (fields.size() != 6) reader.fail("FP line needs 6 fields");
            const int m = static_cast<int>(reader.parse_int(fields[1]));
            const Coord c{reader.parse_double(fields[2]), reader.parse_double(fields[3])};
            const int n = static_cast<int>(reader.parse_int(fields[4]));
            const double rssi = reader.parse_double(fields[5]);
            if (m != current_point) {
                flush_point();
                if (m != current_point + 1) reader.fail("FP lines out of order");
                current_point = m;
                current_coord = c;
            } else if (c.x != current_coord.x || c.y != current_coord.y) {
                reader.fail("FP coordinates disagree for point " + std::to_string(m));
            }
            if (n != static_cast<int>(current_values.size())) {
                reader.fail("FP ap index out of order");
            }
            current_values.push_back(rssi);
            ++fp_seen;
        } else if (fields[0] == "FILT") {
            if (fields.size() != 8) reader.fail("FILT line needs 8 fields");
            PendingParams p;
            p.m = static_cast<int>(reader.parse_int(fields[1]));
            p.n = static_cast<int>(reader.parse_int(fields[2]));
            p.params.mu = reader.parse_double(fields[3]);
            p.params.sigma = reader.parse_double(fields[4]);
            p.params.g_inf = reader.parse_double(fields[5]);
            p.params.g_sup = reader.parse_double(fields[6]);
            p.params.epsilon = reader.parse_double(fields[7]);
            pending_params.push_back(p);
        } else if (fields[0] == "PROV") {
            if (fields.size() != 6) reader.fail("PROV line needs 6 fields");
            ProvenanceRecord rec;
            rec.point_id = static_cast<int>(reader.parse_int(fields[1]));
            rec.ap_index = static_cast<int>(reader.parse_int(fields[2]));
            if (fields[3] == "loss") {
                rec.gate = Gate::kLoss;
            } else if (fields[3] == "fluctuation") {
                rec.gate = Gate::kFluctuation;
            } else {
                reader.fail("unknown gate '" + fields[3] + "'");
            }
            rec.statistic = reader.parse_double(fields[4]);
            rec.threshold = reader.parse_double(fields[5]);
            provenance.push_back(rec);
        } else {
            reader.fail("unknown record type '" + fields[0] + "'");
        }
    }
    flush_point();

    if (fp_seen < point_count * ap_count) {
        throw StoreTruncatedError(origin + ": expected " + std::to_string(point_count * ap_count) +
                                  " FP records, found " + std::to_string(fp_seen));
    }
    if (map.point_count() != point_count) {
        throw StoreCountError(origin + ": header point_count=" + std::to_string(point_count) +
                              " but file has " + std::to_string(map.point_count()));
    }
    for (const auto& p : pending_params) {
        map.set_params(p.m, p.n, p.params);
    }
    for (const auto& rec : provenance) map.add_provenance(rec);

    // every kept fingerprint entry must carry its filter params
    for (const auto& p : map.points()) {
        for (std::size_t n = 0; n < ap_count; ++n) {
            const bool kept = p.fingerprint.values[n] != thresholds.rssi_min;
            if (kept && map.params(p.id, static_cast<int>(n)) == nullptr) {
                throw StoreCountError(origin + ": point " + std::to_string(p.id) + " ap " +
                                      std::to_string(n) + " kept but has no FILT record");
            }
        }
    }
    return map;
}

inline RadioMap load_radiomap(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_radiomap(in, path);
}

// ---------------------------------------------------------------------------
// offline campaign
// ---------------------------------------------------------------------------

inline void save_campaign(const OfflineCampaign& campaign, std::ostream& out) {
    using storefmt::num;
    out << "#HEADER format_version=" << kStoreFormatVersion << "\n";
    out << "#HEADER kind=campaign\n";
    out << "#HEADER venue_width=" << num(campaign.venue_width) << "\n";
    out << "#HEADER venue_height=" << num(campaign.venue_height) << "\n";
    out << "#HEADER grid_pitch=" << num(campaign.grid_pitch) << "\n";
    out << "#HEADER point_count=" << campaign.point_coords.size() << "\n";
    out << "#HEADER ap_count=" << campaign.registry.size() << "\n";
    out << "#HEADER sample_count=" << campaign.sample_count << "\n";
    out << "#HEADER rssi_min=" << num(campaign.rssi_min) << "\n";
    out << "#HEADER seed=" << num(campaign.seed) << "\n";
    for (std::size_t n = 0; n < campaign.registry.size(); ++n) {
        out << "#HEADER mac_" << n << "=" << campaign.registry.mac(n) << "\n";
    }
    for (std::size_t m = 0; m < campaign.point_coords.size(); ++m) {
        out << "RP," << m << "," << num(campaign.point_coords[m].x) << ","
            << num(campaign.point_coords[m].y) << "\n";
    }
    for (const auto& s : campaign.series) {
        out << "SERIES," << s.point_id << "," << s.ap_index;
        for (double v : s.samples) out << "," << num(v);
        out << "\n";
    }
}

inline void save_campaign(const OfflineCampaign& campaign, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    save_campaign(campaign, out);
    if (!out.flush()) throw std::runtime_error("write failed for " + path);
}

inline OfflineCampaign load_campaign(std::istream& in, const std::string& origin = "<campaign>") {
    storefmt::Reader reader(in, origin);
    auto [header, first_line] = storefmt::read_header(reader, "campaign");

    const auto point_count =
        static_cast<std::size_t>(reader.parse_int(header.required(reader, "point_count")));
    const auto ap_count =
        static_cast<std::size_t>(reader.parse_int(header.required(reader, "ap_count")));
    const int sample_count =
        static_cast<int>(reader.parse_int(header.required(reader, "sample_count")));

    OfflineCampaign campaign{storefmt::registry_from_header(reader, header, ap_count),
                             reader.parse_double(header.required(reader, "venue_width")),
                             reader.parse_double(header.required(reader, "venue_height")),
                             reader.parse_double(header.required(reader, "grid_pitch")),
                             {},
                             sample_count,
                             reader.parse_double(header.required(reader, "rssi_min")),
                             reader.parse_uint(header.required(reader, "seed")),
                             {}};
    campaign.point_coords.reserve(point_count);
    campaign.series.reserve(point_count * ap_count);

    std::optional<std::string> line = std::move(first_line);
    for (; line; line = reader.next_line()) {
        auto fields = storefmt::split(*line, ',');
        if (fields[0] == "RP") {
            if (fields.size() != 4) reader.fail("RP line needs 4 fields");
            const auto m = reader.parse_int(fields[1]);
            if (m != static_cast<std::int64_t>(campaign.point_coords.size())) {
                reader.fail("RP ids must be contiguous from 0");
            }
            campaign.point_coords.push_back(
                Coord{reader.parse_double(fields[2]), reader.parse_double(fields[3])});
        } else if (fields[0] == "SERIES") {
            if (fields.size() != static_cast<std::size_t>(sample_count) + 3) {
                reader.fail("SERIES line needs " + std::to_string(sample_count + 3) + " fields");
            }
            RawSampleSeries s;
            s.point_id = static_cast<int>(reader.parse_int(fields[1]));
            s.ap_index = static_cast<int>(reader.parse_int(fields[2]));
            s.samples.reserve(static_cast<std::size_t>(sample_count));
            for (std::size_t i = 3; i < fields.size(); ++i) {
                s.samples.push_back(reader.parse_double(fields[i]));
            }
            campaign.series.push_back(std::move(s));
        } else {
            reader.fail("unknown record type '" + fields[0] + "'");
        }
    }

    if (campaign.point_coords.size() < point_count ||
        campaign.series.size() < point_count * ap_count) {
        throw StoreTruncatedError(origin + ": fewer records than the header announces");
    }
    if (campaign.point_coords.size() != point_count ||
        campaign.series.size() != point_count * ap_count) {
        throw StoreCountError(origin + ": record counts disagree with the header");
    }
    return campaign;
}

inline OfflineCampaign load_campaign(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_campaign(in, path);
}

// ---------------------------------------------------------------------------
// online stream
// ---------------------------------------------------------------------------

inline void save_stream(const OnlineStream& stream, std::ostream& out) {
    using storefmt::num;
    out << "#HEADER format_version=" << kStoreFormatVersion << "\n";
    out << "#HEADER kind=stream\n";
    out << "#HEADER ap_count=" << stream.registry.size() << "\n";
    out << "#HEADER slot_count=" << stream.slots.size() << "\n";
    out << "#HEADER rssi_min=" << num(stream.rssi_min) << "\n";
    out << "#HEADER speed_mps=" << num(stream.speed_mps) << "\n";
    out << "#HEADER slot_dt_s=" << num(stream.slot_dt_s) << "\n";
    out << "#HEADER seed=" << num(stream.seed) << "\n";
    for (std::size_t n = 0; n < stream.registry.size(); ++n) {
        out << "#HEADER mac_" << n << "=" << stream.registry.mac(n) << "\n";
    }
    for (const auto& slot : stream.slots) {
        out << "SLOT," << num(slot.timestamp_us) << "," << num(slot.truth.x) << ","
            << num(slot.truth.y);
        for (double v : slot.rssi.values) out << "," << num(v);
        out << "\n";
    }
}

inline void save_stream(const OnlineStream& stream, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    save_stream(stream, out);
    if (!out.flush()) throw std::runtime_error("write failed for " + path);
}

inline OnlineStream load_stream(std::istream& in, const std::string& origin = "<stream>") {
    storefmt::Reader reader(in, origin);
    auto [header, first_line] = storefmt::read_header(reader, "stream");

    const auto ap_count =
        static_cast<std::size_t>(reader.parse_int(header.required(reader, "ap_count")));
    const auto slot_count =
        static_cast<std::size_t>(reader.parse_int(header.required(reader, "slot_count")));

    OnlineStream stream{storefmt::registry_from_header(reader, header, ap_count),
                        reader.parse_double(header.required(reader, "rssi_min")),
                        reader.parse_double(header.required(reader, "speed_mps")),
                        reader.parse_double(header.required(reader, "slot_dt_s")),
                        reader.parse_uint(header.required(reader, "seed")),
                        {}};
    const auto registry_id = stream.registry.id();
    stream.slots.reserve(slot_count);

    std::optional<std::string> line = std::move(first_line);
    for (; line; line = reader.next_line()) {
        auto fields = storefmt::split(*line, ',');
        if (fields[0] != "SLOT") reader.fail("unknown record type '" + fields[0] + "'");
        if (fields.size() != ap_count + 4) {
            reader.fail("SLOT line needs " + std::to_string(ap_count + 4) + " fields");
        }
        StreamSlot slot;
        slot.timestamp_us = reader.parse_int(fields[1]);
        slot.truth = Coord{reader.parse_double(fields[2]), reader.parse_double(fields[3])};
        slot.rssi.registry_id = registry_id;
        slot.rssi.values.reserve(ap_count);
        for (std::size_t i = 4; i < fields.size(); ++i) {
            slot.rssi.values.push_back(reader.parse_double(fields[i]));
        }
        stream.slots.push_back(std::move(slot));
    }

    if (stream.slots.size() < slot_count) {
        throw StoreTruncatedError(origin + ": expected " + std::to_string(slot_count) +
                                  " SLOT records, found " + std::to_string(stream.slots.size()));
    }
    if (stream.slots.size() != slot_count) {
        throw StoreCountError(origin + ": record counts disagree with the header");
    }
    return stream;
}

inline OnlineStream load_stream(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_stream(in, path);
}

// ---------------------------------------------------------------------------
// CSV side outputs
// ---------------------------------------------------------------------------

inline void write_provenance_csv(const RadioMap& map, std::ostream& out) {
    out << "m,n,gate,statistic,threshold\n";
    for (const auto& rec : map.provenance()) {
        out << rec.point_id << "," << rec.ap_index << "," << to_string(rec.gate) << ","
            << storefmt::num(rec.statistic) << "," << storefmt::num(rec.threshold) << "\n";
    }
}

inline void write_provenance_csv(const RadioMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_provenance_csv(map, out);
    if (!out.flush()) throw std::runtime_error("write failed for " + path);
}

/// One line of the estimate trace emitted by the locate command.
struct TraceRecord {
    std::int64_t timestamp_us = 0;
    double x = 0.0;
    double y = 0.0;
    double true_x = 0.0;
    double true_y = 0.0;
    double error_m = 0.0;
    double elapsed_us = 0.0;
    Algorithm algorithm = Algorithm::kIwknn;
};

inline void write_trace_csv(std::span<const TraceRecord> records, std::ostream& out) {
    using storefmt::num;
    out << "timestamp,x,y,true_x,true_y,error_m,elapsed_us,algorithm\n";
    for (const auto& r : records) {
        out << num(r.timestamp_us) << "," << num(r.x) << "," << num(r.y) << "," << num(r.true_x)
            << "," << num(r.true_y) << "," << num(r.error_m) << "," << num(r.elapsed_us) << ","
            << to_string(r.algorithm) << "\n";
    }
}

inline void write_trace_csv(std::span<const TraceRecord> records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_trace_csv(records, out);
    if (!out.flush()) throw std::runtime_error("write failed for " + path);
}

} // namespace iwknn
