#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "iwknn/selection.hpp"
#include "iwknn/sim.hpp"
#include "iwknn/store.hpp"

using namespace iwknn;

namespace {

RadioMap sample_map(std::uint64_t seed = 51) {
    const VenueLayout layout = make_layout(24.0, 15.0, 3.0, 5);
    NoiseModel noise;
    noise.p_loss = 0.08;
    auto campaign = generate_offline_campaign(layout, noise, 60, seed);
    SelectionThresholds thresholds;
    thresholds.theta1 = 0.12; // bite a little so PROV lines exist
    return offline_select(campaign, thresholds);
}

std::string bytes_of(const RadioMap& map) {
    std::ostringstream out;
    save_radiomap(map, out);
    return out.str();
}

RadioMap from_bytes(const std::string& text) {
    std::istringstream in(text);
    return load_radiomap(in, "mem");
}

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

void require_maps_bitwise_equal(const RadioMap& a, const RadioMap& b) {
    REQUIRE(a.point_count() == b.point_count());
    REQUIRE(a.ap_count() == b.ap_count());
    REQUIRE(a.registry().macs() == b.registry().macs());
    REQUIRE(bitwise_equal(a.venue_width(), b.venue_width()));
    REQUIRE(bitwise_equal(a.venue_height(), b.venue_height()));
    REQUIRE(bitwise_equal(a.grid_pitch(), b.grid_pitch()));
    REQUIRE(a.sample_count() == b.sample_count());
    REQUIRE(bitwise_equal(a.thresholds().theta1, b.thresholds().theta1));
    REQUIRE(bitwise_equal(a.thresholds().theta2, b.thresholds().theta2));
    REQUIRE(bitwise_equal(a.thresholds().epsilon, b.thresholds().epsilon));
    REQUIRE(bitwise_equal(a.thresholds().rssi_min, b.thresholds().rssi_min));
    for (const auto& p : a.points()) {
        const auto& q = b.point(p.id);
        REQUIRE(bitwise_equal(p.x, q.x));
        REQUIRE(bitwise_equal(p.y, q.y));
        for (std::size_t n = 0; n < a.ap_count(); ++n) {
            REQUIRE(bitwise_equal(p.fingerprint.values[n], q.fingerprint.values[n]));
            const FilterParams* fa = a.params(p.id, static_cast<int>(n));
            const FilterParams* fb = b.params(p.id, static_cast<int>(n));
            REQUIRE((fa == nullptr) == (fb == nullptr));
            if (fa != nullptr) {
                REQUIRE(bitwise_equal(fa->mu, fb->mu));
                REQUIRE(bitwise_equal(fa->sigma, fb->sigma));
                REQUIRE(bitwise_equal(fa->g_inf, fb->g_inf));
                REQUIRE(bitwise_equal(fa->g_sup, fb->g_sup));
                REQUIRE(bitwise_equal(fa->epsilon, fb->epsilon));
            }
        }
    }
    REQUIRE(a.provenance().size() == b.provenance().size());
    for (std::size_t i = 0; i < a.provenance().size(); ++i) {
        const auto& ra = a.provenance()[i];
        const auto& rb = b.provenance()[i];
        REQUIRE(ra.point_id == rb.point_id);
        REQUIRE(ra.ap_index == rb.ap_index);
        REQUIRE(ra.gate == rb.gate);
        REQUIRE(bitwise_equal(ra.statistic, rb.statistic));
        REQUIRE(bitwise_equal(ra.threshold, rb.threshold));
    }
}

// flip one line of a stored file
std::string corrupt_line(const std::string& text, std::size_t line_no,
                         const std::string& replacement) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    std::size_t current = 0;
    while (std::getline(in, line)) {
        ++current;
        out << (current == line_no ? replacement : line) << "\n";
    }
    return out.str();
}

} // namespace

TEST_CASE("an empty venue round-trips exactly") {
    RadioMap empty(testutil::make_registry(3), 12.0, 8.0);
    const std::string s1 = bytes_of(empty);
    auto loaded = from_bytes(s1);
    REQUIRE(loaded.point_count() == 0);
    REQUIRE(bytes_of(loaded) == s1);
}

TEST_CASE("save/load is a stable fixpoint and preserves every numeric field") {
    auto map = sample_map();
    REQUIRE_FALSE(map.provenance().empty());

    const std::string s1 = bytes_of(map);
    auto loaded1 = from_bytes(s1);
    const std::string s2 = bytes_of(loaded1);
    REQUIRE(s1 == s2); // one quantization, then byte-stable

    auto loaded2 = from_bytes(s2);
    require_maps_bitwise_equal(loaded1, loaded2);

    // parsing recovers the printed values exactly at 9 significant digits
    for (const auto& p : loaded1.points()) {
        const auto& orig = map.point(p.id);
        for (std::size_t n = 0; n < map.ap_count(); ++n) {
            REQUIRE(p.fingerprint.values[n] ==
                    Catch::Approx(orig.fingerprint.values[n]).epsilon(1e-8));
        }
    }
}

TEST_CASE("store errors are distinct and name the failing line") {
    auto map = sample_map();
    const std::string good = bytes_of(map);

    SECTION("version mismatch") {
        auto bad = corrupt_line(good, 1, "#HEADER format_version=99");
        REQUIRE_THROWS_AS(from_bytes(bad), StoreVersionError);
    }
    SECTION("wrong kind") {
        auto bad = corrupt_line(good, 2, "#HEADER kind=stream");
        REQUIRE_THROWS_AS(from_bytes(bad), StoreVersionError);
    }
    SECTION("garbled numeric field carries its line number") {
        // first FP line comes right after the 12 header keys + 5 macs
        const std::size_t fp_line = 18;
        auto bad = corrupt_line(good, fp_line, "FP,0,zap,0,0,-60");
        try {
            from_bytes(bad);
            FAIL("expected a parse error");
        } catch (const StoreParseError& e) {
            REQUIRE(e.line_number == fp_line);
            REQUIRE(std::string(e.what()).find("mem:18") != std::string::npos);
        }
    }
    SECTION("unknown record type") {
        auto bad = corrupt_line(good, 18, "XXX,1,2,3");
        REQUIRE_THROWS_AS(from_bytes(bad), StoreParseError);
    }
    SECTION("truncated record block") {
        const auto cut = good.find("\nFILT");
        REQUIRE(cut != std::string::npos);
        REQUIRE_THROWS_AS(from_bytes(good.substr(0, good.rfind("FP,"))), StoreTruncatedError);
    }
    SECTION("missing filter params for a kept entry") {
        const auto pos = good.find("FILT,");
        const auto eol = good.find('\n', pos);
        REQUIRE_THROWS_AS(from_bytes(good.substr(0, pos) + good.substr(eol + 1)),
                          StoreCountError);
    }
    SECTION("no header at all") {
        REQUIRE_THROWS_AS(from_bytes("FP,0,1,1,0,-60\n"), StoreTruncatedError);
    }
}

TEST_CASE("campaign files round-trip byte-stably") {
    const VenueLayout layout = make_layout(18.0, 12.0, 3.0, 4);
    NoiseModel noise;
    auto campaign = generate_offline_campaign(layout, noise, 30, 8);

    std::ostringstream out;
    save_campaign(campaign, out);
    const std::string s1 = out.str();

    std::istringstream in(s1);
    auto loaded = load_campaign(in, "mem");
    REQUIRE(loaded.series.size() == campaign.series.size());
    REQUIRE(loaded.registry.macs() == campaign.registry.macs());
    REQUIRE(loaded.sample_count == campaign.sample_count);

    std::ostringstream out2;
    save_campaign(loaded, out2);
    REQUIRE(out2.str() == s1);

    SECTION("a truncated campaign is detected") {
        const auto cut = s1.rfind("SERIES,");
        std::istringstream bad(s1.substr(0, cut));
        REQUIRE_THROWS_AS(load_campaign(bad, "mem"), StoreTruncatedError);
    }
}

TEST_CASE("stream files round-trip byte-stably") {
    const VenueLayout layout = make_layout(18.0, 12.0, 3.0, 4);
    NoiseModel noise;
    auto traj = random_trajectory(layout, 2.0, 0.1, 50, 3);
    auto stream = generate_online_stream(layout, noise, traj, 3);

    std::ostringstream out;
    save_stream(stream, out);
    const std::string s1 = out.str();

    std::istringstream in(s1);
    auto loaded = load_stream(in, "mem");
    REQUIRE(loaded.slots.size() == stream.slots.size());
    REQUIRE(loaded.registry.id() == stream.registry.id());

    std::ostringstream out2;
    save_stream(loaded, out2);
    REQUIRE(out2.str() == s1);

    for (std::size_t i = 0; i < stream.slots.size(); ++i) {
        REQUIRE(loaded.slots[i].timestamp_us == stream.slots[i].timestamp_us);
    }
}

TEST_CASE("trace CSV renders the documented columns") {
    std::vector<TraceRecord> records{
        {1000, 1.5, 2.5, 1.0, 2.0, 0.70710678, 12.5, Algorithm::kIwknn},
        {2000, 3.0, 4.0, 3.0, 4.0, 0.0, 8.25, Algorithm::kWknn},
    };
    std::ostringstream out;
    write_trace_csv(records, out);
    const std::string text = out.str();
    REQUIRE(text.find("timestamp,x,y,true_x,true_y,error_m,elapsed_us,algorithm\n") == 0);
    REQUIRE(text.find("1000,1.5,2.5,1,2,0.70710678,12.5,iwknn\n") != std::string::npos);
    REQUIRE(text.find("2000,3,4,3,4,0,8.25,wknn\n") != std::string::npos);
}

TEST_CASE("provenance CSV lists one line per eliminated entry") {
    auto map = sample_map();
    std::ostringstream out;
    write_provenance_csv(map, out);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    REQUIRE(header == "m,n,gate,statistic,threshold");
    std::size_t lines = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ++lines;
    }
    REQUIRE(lines == map.provenance().size());
}
