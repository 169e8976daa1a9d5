#include "telewip/record_io.hpp"

#include "telewip/config.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace telewip {

using nlohmann::json;

namespace {

const char* const kTrajectoryFields[] = {"t", "x", "y", "yaw", "pitch", "v", "pitch_rate", "yaw_rate", "fallen"};

json sample_row(const TrajectorySample& s) {
    const WipState& w = s.state;
    return json::array({s.t, w.x, w.y, w.yaw, w.pitch, w.v, w.pitch_rate, w.yaw_rate, w.fallen ? 1 : 0});
}

TrajectorySample sample_from(const json& row) {
    if (!row.is_array() || row.size() != std::size(kTrajectoryFields))
        throw std::runtime_error("trial json: malformed trajectory row");
    TrajectorySample s;
    s.t = row[0].get<double>();
    s.state.x = row[1].get<double>();
    s.state.y = row[2].get<double>();
    s.state.yaw = row[3].get<double>();
    s.state.pitch = row[4].get<double>();
    s.state.v = row[5].get<double>();
    s.state.pitch_rate = row[6].get<double>();
    s.state.yaw_rate = row[7].get<double>();
    s.state.fallen = row[8].get<int>() != 0;
    return s;
}

std::string target_name(CollisionTarget t) { return t == CollisionTarget::Wall ? "wall" : "obstacle"; }

CollisionTarget parse_target(const std::string& s) {
    if (s == "wall") return CollisionTarget::Wall;
    if (s == "obstacle") return CollisionTarget::Obstacle;
    throw std::runtime_error("trial json: unknown collision target '" + s + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

json stat_json(const Stat& s) { return {{"n", s.n}, {"mean", s.mean}, {"std", s.std}}; }

}  // namespace

json tape_to_json(const CommandTape& tape) {
    json entries = json::array();
    for (const TapeEntry& e : tape.entries) {
        json row = json::array({e.t, e.x_h, e.y_h});
        if (e.hold) row.push_back(1);
        entries.push_back(std::move(row));
    }
    return {{"schema", "telewip.tape"}, {"version", 1}, {"x_h0", tape.x_h0}, {"y_h0", tape.y_h0},
            {"entries", entries}};
}

CommandTape tape_from_json(const json& j) {
    if (j.value("schema", "") != "telewip.tape") throw std::runtime_error("tape json: wrong schema tag");
    if (j.value("version", 0) != 1) throw std::runtime_error("tape json: unsupported version");
    CommandTape tape;
    tape.x_h0 = j.at("x_h0").get<double>();
    tape.y_h0 = j.at("y_h0").get<double>();
    double last = -std::numeric_limits<double>::infinity();
    for (const json& e : j.at("entries")) {
        if (!e.is_array() || e.size() < 3 || e.size() > 4)
            throw std::runtime_error("tape json: entries are [t, x_h, y_h] or [t, x_h, y_h, hold]");
        TapeEntry entry{e[0].get<double>(), e[1].get<double>(), e[2].get<double>(), e.size() == 4 && e[3].get<int>() != 0};
        if (entry.t < last) throw std::runtime_error("tape json: entry times must be non-decreasing");
        last = entry.t;
        tape.entries.push_back(entry);
    }
    return tape;
}

json trial_to_json(const TrialRecord& rec) {
    json j;
    j["schema"] = "telewip.trial";
    j["version"] = kTrialSchemaVersion;
    j["map"] = std::string(to_string(rec.map));
    j["map_seed"] = rec.map_seed;
    j["start_x"] = rec.start_x;
    j["goal_x"] = rec.goal_x;
    j["mode"] = std::string(to_string(rec.mode));
    j["activation_fc"] = rec.activation_fc;
    j["activation_fh"] = rec.activation_fh;
    j["operator"] = {{"source", rec.operator_source}, {"params", operator_params_to_json(rec.operator_params)}};
    if (rec.tape) j["tape"] = tape_to_json(*rec.tape);
    j["config"] = trial_config_to_json(rec.config);
    j["trajectory_fields"] = kTrajectoryFields;
    json rows = json::array();
    for (const TrajectorySample& s : rec.trajectory) rows.push_back(sample_row(s));
    j["trajectory"] = std::move(rows);
    json events = json::array();
    for (const CollisionEvent& e : rec.collisions) {
        events.push_back({{"t", e.time}, {"target", target_name(e.target)}, {"id", e.id}, {"penetration", e.penetration}});
    }
    j["collisions"] = std::move(events);
    j["outcome"] = std::string(to_string(rec.outcome));
    j["abort_reason"] = rec.abort_reason;
    j["midpoints_total"] = rec.midpoints_total;
    j["midpoints_visited"] = rec.midpoints_visited;
    j["end_time"] = rec.end_time;
    const TrialMetrics& m = rec.metrics;
    j["metrics"] = {{"completion_time", m.completion_time ? json(*m.completion_time) : json(nullptr)},
                    {"completed_distance", m.completed_distance},
                    {"collisions", m.collisions},
                    {"obstacle_collisions", m.obstacle_collisions},
                    {"wall_collisions", m.wall_collisions}};
    return j;
}

TrialRecord trial_from_json(const json& j) {
    if (j.value("schema", "") != "telewip.trial") throw std::runtime_error("trial json: wrong schema tag");
    if (j.value("version", 0) != kTrialSchemaVersion) throw std::runtime_error("trial json: unsupported version");
    TrialRecord rec;
    rec.map = parse_map_name(j.at("map").get<std::string>());
    rec.map_seed = j.at("map_seed").get<std::uint64_t>();
    rec.start_x = j.at("start_x").get<double>();
    rec.goal_x = j.at("goal_x").get<double>();
    rec.mode = parse_feedback_kind(j.at("mode").get<std::string>());
    rec.activation_fc = j.at("activation_fc").get<double>();
    rec.activation_fh = j.at("activation_fh").get<double>();
    rec.operator_source = j.at("operator").at("source").get<std::string>();
    rec.operator_params = operator_params_from_json(j.at("operator").at("params"));
    if (j.contains("tape")) rec.tape = tape_from_json(j.at("tape"));
    rec.config = trial_config_from_json(j.at("config"));
    for (const json& row : j.at("trajectory")) rec.trajectory.push_back(sample_from(row));
    for (const json& e : j.at("collisions")) {
        rec.collisions.push_back({e.at("t").get<double>(), parse_target(e.at("target").get<std::string>()),
                                  e.at("id").get<int>(), e.at("penetration").get<double>()});
    }
    rec.outcome = parse_outcome(j.at("outcome").get<std::string>());
    rec.abort_reason = j.at("abort_reason").get<std::string>();
    rec.midpoints_total = j.at("midpoints_total").get<int>();
    rec.midpoints_visited = j.at("midpoints_visited").get<int>();
    rec.end_time = j.at("end_time").get<double>();
    const json& m = j.at("metrics");
    if (!m.at("completion_time").is_null()) rec.metrics.completion_time = m.at("completion_time").get<double>();
    rec.metrics.completed_distance = m.at("completed_distance").get<double>();
    rec.metrics.collisions = m.at("collisions").get<int>();
    rec.metrics.obstacle_collisions = m.at("obstacle_collisions").get<int>();
    rec.metrics.wall_collisions = m.at("wall_collisions").get<int>();
    return rec;
}

std::string dump_trial(const TrialRecord& rec) { return trial_to_json(rec).dump(); }

void save_trial(const TrialRecord& rec, const std::string& path) { write_file(path, dump_trial(rec) + "\n"); }

TrialRecord load_trial(const std::string& path) { return trial_from_json(json::parse(read_file(path))); }

void save_tape(const CommandTape& tape, const std::string& path) { write_file(path, tape_to_json(tape).dump() + "\n"); }

CommandTape load_tape(const std::string& path) { return tape_from_json(json::parse(read_file(path))); }

json summary_to_json(const CaseSummary& r) {
    return {{"map", std::string(to_string(r.map))},
            {"mode", std::string(to_string(r.mode))},
            {"trials", r.trials},
            {"successes", r.successes},
            {"timeouts", r.timeouts},
            {"falls", r.falls},
            {"errors", r.errors},
            {"success_rate", r.success_rate},
            {"completion_time", stat_json(r.completion_time)},
            {"collision_number", stat_json(r.collisions)},
            {"obstacle_collisions", stat_json(r.obstacle_collisions)},
            {"wall_collisions", stat_json(r.wall_collisions)},
            {"completed_distance", stat_json(r.completed_distance)}};
}

json results_to_json(std::span<const CaseSummary> table) {
    json rows = json::array();
    for (const CaseSummary& r : table) rows.push_back(summary_to_json(r));
    return {{"schema", "telewip.results"}, {"version", 1}, {"cases", rows}};
}

}  // namespace telewip
