#pragma once

#include "telewip/sharedcontrol.hpp"
#include "telewip/worlds.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace telewip {

/// Every message carries {"v": kProtocolVersion, "type": ...}.
inline constexpr int kProtocolVersion = 1;

class WireError : public std::runtime_error {
public:
    WireError(std::string code, const std::string& what) : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

// Client -> server

struct OperatorInput {
    double t = 0.0;  // client timestamp, s; must increase
    double x_h = 0.0;
    double y_h = 0.0;
};

/// Without a neutral the server averages the inputs of the next
/// calibration window; with one it is taken as is.
struct Calibrate {
    std::optional<double> x_h0;
    std::optional<double> y_h0;
};

struct SelectTrial {
    MapName map = MapName::S1Static;
    FeedbackKind mode = FeedbackKind::NF;
    std::uint64_t seed = 0;
};

struct StartTrial {};
struct AbortTrial {};

/// Latency probe; the server answers with a ProbeEcho through the downstream
/// link.
struct Probe {
    std::uint64_t id = 0;
    double t = 0.0;
};

using ClientMessage = std::variant<OperatorInput, Calibrate, SelectTrial, StartTrial, AbortTrial, Probe>;

/// Throws WireError: "malformed" for bad JSON or fields, "unknown_type" for
/// unknown tags, "protocol_version" for a version mismatch.
ClientMessage parse_client_message(std::string_view text);
nlohmann::json to_json(const ClientMessage& msg);

// Server -> client

struct NearbyObstacle {
    int id = 0;
    double x = 0.0;
    double y = 0.0;
    double radius = 0.0;
};

struct StateUpdate {
    double t = 0.0;  // session time, s
    double trial_t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
    double pitch = 0.0;
    double v = 0.0;
    double yaw_rate = 0.0;
    std::vector<NearbyObstacle> obstacles;
    double v_d = 0.0;
    double yaw_rate_star = 0.0;
    bool in_contact = false;
    int collisions = 0;
    std::string phase;    // idle | calibrating | ready | running | finished
    std::string map;      // selected or running trial
    std::string mode;
    std::uint64_t seed = 0;
    std::string outcome;  // running | success | timeout | aborted
    int midpoints_visited = 0;
    int midpoints_total = 0;
    double progress = 0.0;  // completed distance so far
};

struct ForceFeedback {
    double t = 0.0;
    double f_x = 0.0;
    double f_y = 0.0;
};

struct ProbeEcho {
    std::uint64_t id = 0;
    double t = 0.0;           // the probe's client timestamp
    double upstream = 0.0;    // injected client->server delay, s
    double server_t = 0.0;    // session time when the probe reached the loop
};

struct ErrorMessage {
    std::string code;
    std::string message;
};

nlohmann::json hello_json(const nlohmann::json& settings);
nlohmann::json to_json(const StateUpdate& msg);
nlohmann::json to_json(const ForceFeedback& msg);
nlohmann::json to_json(const ProbeEcho& msg);
nlohmann::json to_json(const ErrorMessage& msg);

/// Adds the envelope fields.
nlohmann::json envelope(std::string_view type, nlohmann::json body);

}  // namespace telewip
