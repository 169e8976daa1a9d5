#pragma once

#include "telewip/experiment.hpp"
#include "telewip/operators.hpp"
#include "telewip/trial.hpp"

#include "json.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace telewip {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Live-session settings.
struct SessionSettings {
    int port = 8765;
    double physics_rate = 1000.0;    // Hz
    double broadcast_rate = 60.0;    // Hz, StateUpdate
    double latency_min_ms = 5.0;     // per direction
    double latency_max_ms = 10.0;
    std::uint64_t latency_seed = 1;
    MapName map = MapName::S1Static;
    FeedbackKind mode = FeedbackKind::NF;
    std::uint64_t seed = 1;
    double stale_after = 0.1;        // s without input before the failsafe engages
    double decay_time = 0.5;         // s after the last input at which the command is neutral
    double calibration_window = 1.0; // s
    double nearby_radius = 4.0;      // m, obstacles listed in StateUpdate

    void validate() const;
};

struct AppConfig {
    TrialConfig trial;
    OperatorParams op;
    ExperimentPlan plan;
    SessionSettings session;
    unsigned workers = 1;
    std::string out_dir = "results";
};

/// Unknown sections or keys are errors; missing ones keep their defaults.
AppConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const AppConfig& config);

/// Reads TOML (.toml) or JSON (anything else) and validates the result.
AppConfig load_config(const std::string& path);
AppConfig parse_config(std::string_view text, bool toml);

nlohmann::json trial_config_to_json(const TrialConfig& config);
TrialConfig trial_config_from_json(const nlohmann::json& j);
nlohmann::json operator_params_to_json(const OperatorParams& op);
OperatorParams operator_params_from_json(const nlohmann::json& j);

}  // namespace telewip
