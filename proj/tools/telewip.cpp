#include "telewip/config.hpp"
#include "telewip/experiment.hpp"
#include "telewip/forcefield.hpp"
#include "telewip/map_io.hpp"
#include "telewip/record_io.hpp"
#include "telewip/server.hpp"
#include "telewip/worlds.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace telewip;

namespace {

AppConfig config_or_default(const std::string& path) { return path.empty() ? AppConfig{} : load_config(path); }

int cmd_run(const std::string& config_path, const std::string& out_override, int workers_override, bool quiet) {
    AppConfig cfg = load_config(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (workers_override >= 0) cfg.workers = static_cast<unsigned>(workers_override);
    const auto schedule_size = make_schedule(cfg.plan).size();
    std::size_t done = 0;
    ProgressFn progress;
    if (!quiet) {
        progress = [&](const ScheduledTrial& e, const TrialRecord& r) {
            ++done;
            std::cerr << '[' << done << '/' << schedule_size << "] " << to_string(e.map) << ' ' << to_string(e.mode)
                      << " #" << e.index << ' ' << to_string(r.outcome) << " C-N=" << r.metrics.collisions << '\n';
        };
    }
    const ExperimentResult result = run_experiment(cfg.plan, cfg.trial, cfg.op, cfg.workers, progress);
    write_experiment(result, cfg.out_dir);
    std::cout << results_csv(result.table);
    int errors = 0;
    for (const TrialRecord& r : result.records) {
        if (is_error_abort(r)) {
            ++errors;
            std::cerr << "trial " << to_string(r.map) << ' ' << to_string(r.mode) << " seed " << r.map_seed << ": "
                      << r.abort_reason << '\n';
        }
    }
    std::cerr << "wrote " << result.records.size() << " trials to " << cfg.out_dir << '\n';
    if (errors > 0) {
        std::cerr << errors << " trial(s) aborted by error\n";
        return 2;
    }
    return 0;
}

TrialRecord regenerate(const TrialRecord& rec) {
    const MapSpec map = make_map(rec.map, rec.map_seed, rec.config.map);
    if (rec.operator_source == "synthetic") return run_trial(map, rec.mode, rec.operator_params, rec.config);
    if (!rec.tape) throw std::runtime_error("record has source '" + rec.operator_source + "' but no tape");
    TrialRecord out = run_tape(map, rec.mode, *rec.tape, rec.config);
    out.operator_source = rec.operator_source;
    out.operator_params = rec.operator_params;
    return out;
}

int cmd_replay(const std::string& path, const std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const TrialRecord rec = trial_from_json(nlohmann::json::parse(buf.str()));
    const TrialRecord again = regenerate(rec);
    const std::string a = dump_trial(rec);
    const std::string b = dump_trial(again);
    if (!out.empty()) save_trial(again, out);
    std::cout << "outcome " << to_string(again.outcome) << ", collisions " << again.metrics.collisions
              << ", completed distance " << again.metrics.completed_distance << '\n';
    if (a == b) {
        std::cout << "replay identical (" << b.size() << " bytes)\n";
        return 0;
    }
    std::size_t i = 0;
    while (i < a.size() && i < b.size() && a[i] == b[i]) ++i;
    std::cout << "replay differs at byte " << i << '\n';
    return 1;
}

int cmd_gen_maps(const std::string& config_path, const std::string& dir, std::uint64_t seed) {
    const AppConfig cfg = config_or_default(config_path);
    std::filesystem::create_directories(dir);
    for (MapName name : {MapName::S1Static, MapName::S1Dynamic, MapName::S2StaticBright, MapName::S2StaticDark,
                         MapName::S2Dynamic}) {
        const MapSpec map = make_map(name, seed, cfg.trial.map);
        const std::string path = (std::filesystem::path(dir) / (std::string(to_string(name)) + ".json")).string();
        save_map(map, path);
        std::cout << path << ": " << map.obstacles.size() << " obstacles, " << map.midpoints.size() << " midpoints, "
                  << (grid_feasible(map, cfg.trial.robot_radius) ? "feasible" : "INFEASIBLE") << '\n';
    }
    return 0;
}

int cmd_profile(const std::string& config_path, ProfileSpec spec, const std::string& out) {
    const AppConfig cfg = config_or_default(config_path);
    const std::vector<ProfileRow> rows = force_profile(cfg.trial.force, spec);
    std::ofstream file;
    if (!out.empty()) {
        file.open(out);
        if (!file) throw std::runtime_error("cannot write " + out);
    }
    std::ostream& os = out.empty() ? std::cout : file;
    os << "p,tdsf,td_apf,apf_saturated\n" << std::setprecision(10);
    for (const ProfileRow& r : rows) os << r.p << ',' << r.tdsf << ',' << r.td_apf << ',' << (r.apf_saturated ? 1 : 0) << '\n';
    return 0;
}

int cmd_worlds_gen(const std::string& config_path, const std::string& map_name, std::uint64_t seed,
                   const std::string& out) {
    const AppConfig cfg = config_or_default(config_path);
    const MapSpec map = make_map(parse_map_name(map_name), seed, cfg.trial.map);
    if (out.empty()) {
        std::cout << map_to_json(map).dump(2) << '\n';
    } else {
        save_map(map, out);
    }
    return 0;
}

int cmd_serve(const std::string& config_path, int port_flag, const std::string& address) {
    const AppConfig cfg = config_or_default(config_path);
    const int port = port_flag >= 0 ? port_flag : port_from_env(cfg.session.port);
    SessionServer server(cfg, address, static_cast<unsigned short>(port));
    server.start();
    std::cerr << "listening on ws://" << address << ':' << server.port() << "/session\n";
    server.wait();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"telewip: shared-control teleoperation of a wheeled inverted pendulum"};
    app.require_subcommand(1);
    int rc = 0;

    std::string run_config, run_out;
    int run_workers = -1;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Run a scheduled experiment");
    run->add_option("--config", run_config, "Experiment config (.toml or .json)")->required();
    run->add_option("--out", run_out, "Output directory (overrides the config)");
    run->add_option("--workers", run_workers, "Worker threads, 0 = all cores (overrides the config)");
    run->add_flag("--quiet", quiet, "No per-trial progress");
    run->callback([&] { rc = cmd_run(run_config, run_out, run_workers, quiet); });

    std::string replay_path, replay_out;
    auto* replay = app.add_subcommand("replay", "Regenerate a trial record and compare it byte for byte");
    replay->add_option("--trial", replay_path, "Trial record JSON")->required();
    replay->add_option("--out", replay_out, "Write the regenerated record here");
    replay->callback([&] { rc = cmd_replay(replay_path, replay_out); });

    std::string maps_config, maps_dir = "maps";
    std::uint64_t maps_seed = 1;
    auto* gen_maps = app.add_subcommand("gen-maps", "Write every named map as JSON");
    gen_maps->add_option("--config", maps_config, "Config file for map generation knobs");
    gen_maps->add_option("--out", maps_dir, "Output directory");
    gen_maps->add_option("--seed", maps_seed, "Seed for the randomized maps");
    gen_maps->callback([&] { rc = cmd_gen_maps(maps_config, maps_dir, maps_seed); });

    auto* ff = app.add_subcommand("forcefield", "Force-field tools");
    ff->require_subcommand(1);
    ProfileSpec spec;
    std::string profile_config, profile_out;
    auto* profile = ff->add_subcommand("profile", "CSV of TDSF and TD-APF magnitude against distance");
    profile->add_option("--config", profile_config, "Config file for ForceParams");
    profile->add_option("--p-max", spec.p_max, "Largest distance, m")->capture_default_str();
    profile->add_option("--step", spec.step, "Distance step, m")->capture_default_str();
    profile->add_option("--speed", spec.approach_speed, "Approach speed |dp/dt|, m/s")->capture_default_str();
    profile->add_option("--activation", spec.activation, "Activation distance for both fields, m")->capture_default_str();
    profile->add_option("--eta", spec.eta, "APF gain")->capture_default_str();
    profile->add_option("--ceiling", spec.ceiling, "APF clamp")->capture_default_str();
    profile->add_option("--out", profile_out, "CSV path (default stdout)");
    profile->callback([&] { rc = cmd_profile(profile_config, spec, profile_out); });

    auto* worlds = app.add_subcommand("worlds", "Map tools");
    worlds->require_subcommand(1);
    std::string wg_config, wg_map, wg_out;
    std::uint64_t wg_seed = 1;
    auto* wgen = worlds->add_subcommand("gen", "Generate one map as JSON");
    wgen->add_option("--map", wg_map, "Map name, e.g. s2dyn or S2StaticBright")->required();
    wgen->add_option("--seed", wg_seed, "Generation seed");
    wgen->add_option("--out", wg_out, "Output path (default stdout)");
    wgen->add_option("--config", wg_config, "Config file for map generation knobs");
    wgen->callback([&] { rc = cmd_worlds_gen(wg_config, wg_map, wg_seed, wg_out); });

    std::string serve_config, address = "127.0.0.1";
    int serve_port = -1;
    auto* serve = app.add_subcommand("serve", "Live session server at ws://HOST:PORT/session");
    serve->add_option("--config", serve_config, "Config file");
    serve->add_option("--port", serve_port, "Port (default: TELEWIP_PORT, then the config)");
    serve->add_option("--host", address, "Bind address")->capture_default_str();
    serve->callback([&] { rc = cmd_serve(serve_config, serve_port, address); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return rc;
}
