// Command-line front end: simulate / train / locate / bench.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iwknn/iwknn.hpp"

namespace {

using namespace iwknn;

double parse_double_arg(const std::string& text, const std::string& what) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') {
        throw std::runtime_error(what + ": not a number: " + text);
    }
    return v;
}

// flag wins over config; both absent is an error for required parameters
double require_param(const ConfigMap& cfg, const std::optional<double>& flag,
                     const std::string& key) {
    if (flag) return *flag;
    auto it = cfg.find(key);
    if (it != cfg.end()) return parse_double_arg(it->second, key);
    throw std::runtime_error("missing required parameter '" + key +
                             "' (pass --" + key + " or set it in --config)");
}

double optional_param(const ConfigMap& cfg, const std::optional<double>& flag,
                      const std::string& key, double fallback) {
    if (flag) return *flag;
    auto it = cfg.find(key);
    if (it != cfg.end()) return parse_double_arg(it->second, key);
    return fallback;
}

struct SimulateArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateArgs& args) {
    ConfigMap cfg;
    if (!args.config_path.empty()) cfg = parse_config_file(args.config_path);

    const VenueLayout layout = make_layout(
        config_double(cfg, "venue_width", 50.0), config_double(cfg, "venue_height", 30.0),
        config_double(cfg, "grid_pitch", 2.45),
        static_cast<int>(config_long(cfg, "ap_count", 10)),
        config_double(cfg, "tx_power_dbm", -30.0));

    NoiseModel noise;
    noise.sigma_dbm = config_double(cfg, "noise_sigma_dbm", noise.sigma_dbm);
    noise.p_loss = config_double(cfg, "p_loss", noise.p_loss);
    noise.p_fade = config_double(cfg, "p_fade", noise.p_fade);
    noise.fade_depth_dbm = config_double(cfg, "fade_depth_dbm", noise.fade_depth_dbm);
    noise.fade_sigma_dbm = config_double(cfg, "fade_sigma_dbm", noise.fade_sigma_dbm);

    PathLossModel path;
    path.exponent = config_double(cfg, "path_loss_exponent", path.exponent);
    path.d0 = config_double(cfg, "reference_distance_m", path.d0);

    const int samples = static_cast<int>(config_long(cfg, "samples_per_point", 1000));
    const int slots = static_cast<int>(config_long(cfg, "stream_slots", 1000));
    const double speed = config_double(cfg, "speed_mps", 3.0);
    const double dt = config_double(cfg, "slot_dt_s", 0.02);
    const double rssi_min = config_double(cfg, "rssi_min", kDefaultRssiMin);

    std::filesystem::create_directories(args.out_dir);
    const OfflineCampaign campaign =
        generate_offline_campaign(layout, noise, samples, args.seed, rssi_min, path);
    save_campaign(campaign, args.out_dir + "/campaign.txt");

    const Trajectory traj = random_trajectory(layout, speed, dt, slots, args.seed);
    const OnlineStream stream =
        generate_online_stream(layout, noise, traj, args.seed, rssi_min, path);
    save_stream(stream, args.out_dir + "/stream.txt");

    std::printf("simulate: %d points x %zu aps, S=%d, %d stream slots -> %s\n",
                layout.point_count(), layout.aps.size(), samples, slots, args.out_dir.c_str());
    return 0;
}

struct TrainArgs {
    std::string config_path;
    std::string campaign_path;
    std::string out_path;
    std::optional<double> theta1;
    std::optional<double> theta2;
    std::optional<double> epsilon;
    std::optional<double> rssi_min;
    std::optional<double> grid_step;
    std::optional<double> g_max;
};

int cmd_train(const TrainArgs& args) {
    ConfigMap cfg;
    if (!args.config_path.empty()) cfg = parse_config_file(args.config_path);

    const OfflineCampaign campaign = load_campaign(args.campaign_path);
    SelectionThresholds thresholds;
    thresholds.theta1 = require_param(cfg, args.theta1, "theta1");
    thresholds.theta2 = require_param(cfg, args.theta2, "theta2");
    thresholds.epsilon = require_param(cfg, args.epsilon, "epsilon");
    thresholds.rssi_min = optional_param(cfg, args.rssi_min, "rssi_min", campaign.rssi_min);

    FitOptions fit;
    fit.grid_step = optional_param(cfg, args.grid_step, "grid_step", fit.grid_step);
    fit.g_max = optional_param(cfg, args.g_max, "g_max", fit.g_max);

    const RadioMap map = offline_select(campaign, thresholds, fit);
    save_radiomap(map, args.out_path);
    write_provenance_csv(map, args.out_path + ".prov.csv");

    std::printf("train: %zu points x %zu aps, %zu entries eliminated -> %s\n", map.point_count(),
                map.ap_count(), map.provenance().size(), args.out_path.c_str());
    return 0;
}

struct PipelineArgs {
    std::string config_path;
    std::string map_path;
    std::string stream_path;
    std::string algo = "iwknn";
    std::optional<double> k;
    std::optional<double> window;
    std::optional<double> theta1;
    std::optional<double> theta2;
    std::optional<double> epsilon;
    std::optional<double> rssi_min;
    std::optional<double> history;
    std::string radius_text; // accepts "inf"
    bool no_filter = false;
    std::string out_path;
    int warmup = kDefaultWarmupCalls;
};

LocatorOptions resolve_options(const PipelineArgs& args, const ConfigMap& cfg,
                               const RadioMap& map, const OnlineStream& stream,
                               bool need_pipeline_params) {
    LocatorOptions options;
    options.k = static_cast<int>(require_param(cfg, args.k, "k"));
    options.thresholds = map.thresholds();
    options.thresholds.rssi_min = optional_param(cfg, args.rssi_min, "rssi_min", map.rssi_min());
    if (!need_pipeline_params) {
        options.candidate_radius = std::numeric_limits<double>::infinity();
        return options;
    }
    options.window_capacity = static_cast<std::size_t>(require_param(cfg, args.window, "window"));
    options.thresholds.theta1 = require_param(cfg, args.theta1, "theta1");
    // theta2 and epsilon only act offline; the map's trained values stand
    // unless overridden
    options.thresholds.theta2 =
        optional_param(cfg, args.theta2, "theta2", options.thresholds.theta2);
    options.thresholds.epsilon =
        optional_param(cfg, args.epsilon, "epsilon", options.thresholds.epsilon);
    options.history_depth =
        static_cast<std::size_t>(optional_param(cfg, args.history, "history", 3.0));
    options.disable_filter = args.no_filter;

    if (!args.radius_text.empty()) {
        options.candidate_radius = parse_double_arg(args.radius_text, "radius");
    } else if (cfg.count("radius") != 0) {
        options.candidate_radius = parse_double_arg(cfg.at("radius"), "radius");
    } else {
        // adjacency default: twice the per-slot displacement plus the pitch
        if (stream.speed_mps <= 0.0 || stream.slot_dt_s <= 0.0 || map.grid_pitch() <= 0.0) {
            throw std::runtime_error("cannot derive --radius from file metadata; pass it");
        }
        options.candidate_radius =
            2.0 * stream.speed_mps * stream.slot_dt_s + map.grid_pitch();
        std::printf("derived candidate radius %.3f m\n", options.candidate_radius);
    }
    return options;
}

void check_compatible(const RadioMap& map, const OnlineStream& stream) {
    if (map.registry().id() != stream.registry.id()) {
        throw std::runtime_error("map and stream use different AP registries");
    }
}

int cmd_locate(const PipelineArgs& args) {
    ConfigMap cfg;
    if (!args.config_path.empty()) cfg = parse_config_file(args.config_path);
    const auto algo = algorithm_from_string(args.algo);
    if (!algo) throw std::runtime_error("unknown --algo '" + args.algo + "'");

    const RadioMap map = load_radiomap(args.map_path);
    const OnlineStream stream = load_stream(args.stream_path);
    check_compatible(map, stream);
    const LocatorOptions options =
        resolve_options(args, cfg, map, stream, *algo == Algorithm::kIwknn);

    const AlgoRun run = run_algorithm(map, stream, options, *algo, /*warmup=*/0);
    write_trace_csv(run.trace, args.out_path);
    std::printf("locate: %zu queries, mean error %.3f m -> %s\n", run.stats.queries,
                run.stats.mean_error_m, args.out_path.c_str());
    return 0;
}

int cmd_bench(const PipelineArgs& args) {
    ConfigMap cfg;
    if (!args.config_path.empty()) cfg = parse_config_file(args.config_path);

    const RadioMap map = load_radiomap(args.map_path);
    const OnlineStream stream = load_stream(args.stream_path);
    check_compatible(map, stream);
    const LocatorOptions options = resolve_options(args, cfg, map, stream, true);

    std::filesystem::create_directories(args.out_path);
    const BenchReport report = run_bench(map, stream, options, args.warmup);
    write_report_files(report, args.out_path);

    std::printf("%-8s %8s %12s %12s %14s %16s\n", "algo", "queries", "mean_err_m", "p95_err_m",
                "frac_under_2m", "median_lat_us");
    for (const auto& run : report.runs) {
        const auto& s = run.stats;
        std::printf("%-8s %8zu %12.3f %12.3f %14.3f %16.2f\n", to_string(s.algorithm), s.queries,
                    s.mean_error_m, s.p95_error_m, s.frac_under_2m, s.median_latency_us);
    }
    std::printf("bench: reports -> %s\n", args.out_path.c_str());
    return 0;
}

void add_pipeline_options(CLI::App* sub, PipelineArgs& args, bool bench) {
    sub->add_option("--config", args.config_path, "key = value config file");
    sub->add_option("--map", args.map_path, "radio map file")->required();
    sub->add_option("--stream", args.stream_path, "query stream file")->required();
    if (!bench) {
        sub->add_option("--algo", args.algo, "iwknn|wknn|knn")->required();
    }
    sub->add_option("--k", args.k, "neighbor count K");
    sub->add_option("--window", args.window, "online window capacity T");
    sub->add_option("--theta1", args.theta1, "loss-rate threshold");
    sub->add_option("--theta2", args.theta2, "jitter threshold override");
    sub->add_option("--epsilon", args.epsilon, "filter deviation override");
    sub->add_option("--rssi-min", args.rssi_min, "missing-signal sentinel override");
    sub->add_option("--radius", args.radius_text, "candidate radius in meters ('inf' disables)");
    sub->add_option("--history", args.history, "estimate history depth");
    sub->add_flag("--no-filter", args.no_filter, "disable the online asymmetric filter");
    sub->add_option("--out", args.out_path, bench ? "report directory" : "trace CSV path")
        ->required();
    if (bench) {
        sub->add_option("--warmup", args.warmup, "discarded warm-up calls per algorithm");
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"WiFi RSSI fingerprint positioning: simulator, trainer, locator, benchmark"};
    app.require_subcommand(1);

    SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "generate a synthetic campaign and query stream");
    sim->add_option("--config", sim_args.config_path, "key = value config file");
    sim->add_option("--seed", sim_args.seed, "campaign seed")->required();
    sim->add_option("--out", sim_args.out_dir, "output directory")->required();

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "build a radio map from an offline campaign");
    train->add_option("--config", train_args.config_path, "key = value config file");
    train->add_option("--campaign", train_args.campaign_path, "campaign file")->required();
    train->add_option("--theta1", train_args.theta1, "loss-rate threshold");
    train->add_option("--theta2", train_args.theta2, "jitter threshold");
    train->add_option("--epsilon", train_args.epsilon, "filter deviation tolerance");
    train->add_option("--rssi-min", train_args.rssi_min, "missing-signal sentinel override");
    train->add_option("--grid-step", train_args.grid_step, "bound fit grid step");
    train->add_option("--g-max", train_args.g_max, "bound fit grid cap");
    train->add_option("--out", train_args.out_path, "radio map output path")->required();

    PipelineArgs locate_args;
    auto* locate = app.add_subcommand("locate", "run one algorithm over a stream");
    add_pipeline_options(locate, locate_args, /*bench=*/false);

    PipelineArgs bench_args;
    auto* bench = app.add_subcommand("bench", "run all three algorithms and write reports");
    add_pipeline_options(bench, bench_args, /*bench=*/true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim_args);
        if (train->parsed()) return cmd_train(train_args);
        if (locate->parsed()) return cmd_locate(locate_args);
        if (bench->parsed()) return cmd_bench(bench_args);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
