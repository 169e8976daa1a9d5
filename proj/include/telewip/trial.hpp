#pragma once

#include "telewip/dynamics.hpp"
#include "telewip/forcefield.hpp"
#include "telewip/operators.hpp"
#include "telewip/sharedcontrol.hpp"
#include "telewip/worlds.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace telewip {

/// Everything a trial needs besides the map, the mode and the operator.
struct TrialConfig {
    WipParams wip;
    ControllerConfig controller;
    ForceParams force;
    VelocityMapping mapping;
    SharedControlLimits limits;
    MapConfig map;
    double activation_fh = 2.0;  // F-H activation when used alone; Combo derives its own
    double robot_radius = 0.25;
    double physics_dt = 0.001;
    double timeout = 180.0;
    double sample_rate = 50.0;
    double midpoint_radius = 0.5;
    bool contact_response = true;
    double contact_height = 0.375;  // impact point above the axle, m

    void validate() const;
    FeedbackMode feedback_mode(FeedbackKind kind) const;
};

enum class Outcome { Running, Success, Timeout, Aborted };

std::string_view to_string(Outcome outcome);
Outcome parse_outcome(std::string_view text);

struct TrajectorySample {
    double t = 0.0;
    WipState state;

    friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

struct TrialMetrics {
    std::optional<double> completion_time;
    double completed_distance = 0.0;
    int collisions = 0;
    int obstacle_collisions = 0;
    int wall_collisions = 0;

    friend bool operator==(const TrialMetrics&, const TrialMetrics&) = default;
};

/// Recorded operator input, applied latest-wins: at time t the most recent
/// entry with entry.t <= t is in effect, neutral before the first entry.
struct TapeEntry {
    double t = 0.0;
    double x_h = 0.0;
    double y_h = 0.0;
    bool hold = false;  // failsafe: forward and yaw commands forced to zero

    friend bool operator==(const TapeEntry&, const TapeEntry&) = default;
};

struct CommandTape {
    double x_h0 = 0.0;
    double y_h0 = 0.0;
    std::vector<TapeEntry> entries;

    friend bool operator==(const CommandTape&, const CommandTape&) = default;
};

inline constexpr int kTrialSchemaVersion = 1;

/// One trial, self-contained enough to be replayed.
struct TrialRecord {
    MapName map = MapName::Empty;
    std::uint64_t map_seed = 0;
    double start_x = 0.0;
    double goal_x = 0.0;
    FeedbackKind mode = FeedbackKind::NF;
    double activation_fc = 0.0;
    double activation_fh = 0.0;
    std::string operator_source = "synthetic";  // synthetic | tape | live
    OperatorParams operator_params;
    std::optional<CommandTape> tape;  // present for tape-driven and live trials
    TrialConfig config;
    std::vector<TrajectorySample> trajectory;
    std::vector<CollisionEvent> collisions;
    Outcome outcome = Outcome::Running;
    std::string abort_reason;
    int midpoints_total = 0;
    int midpoints_visited = 0;
    double end_time = 0.0;
    TrialMetrics metrics;
};

class TapePlayer {
public:
    explicit TapePlayer(const CommandTape& tape) : tape_(&tape) {}
    /// Queries must be non-decreasing in t.
    OperatorState at(double t);
    /// Hold flag of the entry selected by the last `at` call.
    bool hold() const;

private:
    const CommandTape* tape_;
    std::size_t cursor_ = 0;
};

/// The closed loop of a single trial, advanced one physics tick at a time:
/// observe, shared control, balance/yaw control, dynamics, obstacle motion,
/// collision check.
class TrialSimulation {
public:
    TrialSimulation(MapSpec map, FeedbackMode mode, TrialConfig config);
    TrialSimulation(const TrialSimulation&) = delete;
    TrialSimulation& operator=(const TrialSimulation&) = delete;

    /// One physics tick. With `hold` the velocity and yaw commands are
    /// forced to zero after shared control (the live-session failsafe).
    void step(const OperatorState& op, bool hold = false);
    void abort(std::string reason);

    bool finished() const { return outcome_ != Outcome::Running; }
    Outcome outcome() const { return outcome_; }
    double time() const { return static_cast<double>(ticks_) * config_.physics_dt; }
    std::uint64_t ticks() const { return ticks_; }
    const MapSpec& map() const { return map_; }
    const FeedbackMode& mode() const { return mode_; }
    const TrialConfig& config() const { return config_; }
    const WipState& robot() const { return robot_; }
    const std::vector<Obstacle>& obstacles() const { return obstacles_; }
    const SharedControlOutput& last_output() const { return last_output_; }
    const HmiForceCommand& last_hmi() const { return last_output_.hmi; }
    const std::vector<CollisionEvent>& collisions() const { return collisions_; }
    bool in_contact() const { return monitor_.in_contact(); }
    int midpoints_visited() const { return static_cast<int>(next_midpoint_); }
    double max_progress_x() const { return max_x_; }

    /// Snapshot of the record; metrics are computed from the logged data.
    TrialRecord record() const;

private:
    void apply_contacts(const std::vector<Contact>& contacts);
    void sample();

    MapSpec map_;
    FeedbackMode mode_;
    TrialConfig config_;
    WipController controller_;
    WipState robot_;
    std::vector<Obstacle> obstacles_;
    std::vector<ObstacleObservation> observations_;
    CollisionMonitor monitor_;
    SharedControlOutput last_output_;
    std::vector<TrajectorySample> trajectory_;
    std::vector<CollisionEvent> collisions_;
    std::uint64_t ticks_ = 0;
    std::uint64_t sample_every_ = 20;
    std::size_t next_midpoint_ = 0;
    double max_x_ = 0.0;
    Outcome outcome_ = Outcome::Running;
    std::string abort_reason_;
    double end_time_ = 0.0;
};

/// Synthetic-operator trial. When `tape` is given, the operator's commands
/// are recorded into it.
TrialRecord run_trial(const MapSpec& map, FeedbackKind mode, const OperatorParams& op, const TrialConfig& config,
                      CommandTape* tape = nullptr);

/// Trial driven by a recorded command tape.
TrialRecord run_tape(const MapSpec& map, FeedbackKind mode, const CommandTape& tape, const TrialConfig& config);

}  // namespace telewip
