#include "telewip/wire.hpp"

#include <cmath>

namespace telewip {

using nlohmann::json;

namespace {

double number(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) throw WireError("malformed", std::string("missing number '") + key + "'");
    const double v = j.at(key).get<double>();
    if (!std::isfinite(v)) throw WireError("malformed", std::string("'") + key + "' must be finite");
    return v;
}

std::optional<double> optional_number(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return number(j, key);
}

std::string text(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_string()) throw WireError("malformed", std::string("missing string '") + key + "'");
    return j.at(key).get<std::string>();
}

std::uint64_t unsigned_int(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number_unsigned())
        throw WireError("malformed", std::string("missing non-negative integer '") + key + "'");
    return j.at(key).get<std::uint64_t>();
}

struct ToJson {
    json operator()(const OperatorInput& m) const {
        return envelope("operator_input", {{"t", m.t}, {"x_h", m.x_h}, {"y_h", m.y_h}});
    }
    json operator()(const Calibrate& m) const {
        json body = json::object();
        if (m.x_h0) body["x_h0"] = *m.x_h0;
        if (m.y_h0) body["y_h0"] = *m.y_h0;
        return envelope("calibrate", body);
    }
    json operator()(const SelectTrial& m) const {
        return envelope("select_trial", {{"map", std::string(to_string(m.map))},
                                         {"mode", std::string(to_string(m.mode))},
                                         {"seed", m.seed}});
    }
    json operator()(const StartTrial&) const { return envelope("start_trial", json::object()); }
    json operator()(const AbortTrial&) const { return envelope("abort_trial", json::object()); }
    json operator()(const Probe& m) const { return envelope("probe", {{"id", m.id}, {"t", m.t}}); }
};

}  // namespace

json envelope(std::string_view type, json body) {
    body["v"] = kProtocolVersion;
    body["type"] = std::string(type);
    return body;
}

ClientMessage parse_client_message(std::string_view raw) {
    json j = json::parse(raw, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw WireError("malformed", "message is not a JSON object");
    if (!j.contains("v") || !j.at("v").is_number_integer())
        throw WireError("protocol_version", "missing protocol version");
    if (j.at("v").get<long long>() != kProtocolVersion)
        throw WireError("protocol_version", "protocol version " + j.at("v").dump() + " is not supported (server speaks " +
                                                std::to_string(kProtocolVersion) + ")");
    const std::string type = text(j, "type");
    try {
        if (type == "operator_input") return OperatorInput{number(j, "t"), number(j, "x_h"), number(j, "y_h")};
        if (type == "calibrate") {
            Calibrate c{optional_number(j, "x_h0"), optional_number(j, "y_h0")};
            if (c.x_h0.has_value() != c.y_h0.has_value())
                throw WireError("malformed", "calibrate needs both x_h0 and y_h0 or neither");
            return c;
        }
        if (type == "select_trial") {
            return SelectTrial{parse_map_name(text(j, "map")), parse_feedback_kind(text(j, "mode")),
                               unsigned_int(j, "seed")};
        }
        if (type == "start_trial") return StartTrial{};
        if (type == "abort_trial") return AbortTrial{};
        if (type == "probe") return Probe{unsigned_int(j, "id"), number(j, "t")};
    } catch (const std::invalid_argument& e) {
        throw WireError("malformed", e.what());
    }
    throw WireError("unknown_type", "unknown message type '" + type + "'");
}

json to_json(const ClientMessage& msg) { return std::visit(ToJson{}, msg); }

json hello_json(const json& settings) {
    return envelope("hello", {{"protocol", kProtocolVersion}, {"settings", settings}});
}

json to_json(const StateUpdate& m) {
    json obstacles = json::array();
    for (const NearbyObstacle& o : m.obstacles) {
        obstacles.push_back({{"id", o.id}, {"x", o.x}, {"y", o.y}, {"r", o.radius}});
    }
    return envelope("state_update", {{"t", m.t},
                                     {"trial_t", m.trial_t},
                                     {"robot", {{"x", m.x}, {"y", m.y}, {"yaw", m.yaw}, {"pitch", m.pitch},
                                                {"v", m.v}, {"yaw_rate", m.yaw_rate}}},
                                     {"obstacles", obstacles},
                                     {"v_d", m.v_d},
                                     {"yaw_rate_star", m.yaw_rate_star},
                                     {"collision", {{"in_contact", m.in_contact}, {"count", m.collisions}}},
                                     {"status", {{"phase", m.phase},
                                                 {"map", m.map},
                                                 {"mode", m.mode},
                                                 {"seed", m.seed},
                                                 {"outcome", m.outcome},
                                                 {"midpoints_visited", m.midpoints_visited},
                                                 {"midpoints_total", m.midpoints_total},
                                                 {"progress", m.progress}}}});
}

json to_json(const ForceFeedback& m) { return envelope("force_feedback", {{"t", m.t}, {"f_x", m.f_x}, {"f_y", m.f_y}}); }

json to_json(const ProbeEcho& m) {
    return envelope("probe_echo", {{"id", m.id}, {"t", m.t}, {"upstream", m.upstream}, {"server_t", m.server_t}});
}

json to_json(const ErrorMessage& m) { return envelope("error", {{"code", m.code}, {"message", m.message}}); }

}  // namespace telewip
