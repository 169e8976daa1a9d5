#pragma once

#include "telewip/config.hpp"
#include "telewip/latency.hpp"
#include "telewip/trial.hpp"
#include "telewip/wire.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace telewip {

enum class SessionPhase { Idle, Calibrating, Ready, Running, Finished };

std::string_view to_string(SessionPhase phase);

/// The simulation side of a live session, independent of any clock or
/// transport. Frames go in through `receive` with their arrival time, time
/// moves forward through `advance_to`, and frames due for the client come
/// out of `take_outbound`. Both directions pass through their own seeded
/// latency queue.
///
/// Physics runs on a fixed tick grid (tick k at k / physics_rate). The
/// operator input in effect at a tick is the latest one delivered at or
/// before it. Without fresh input the command holds for `stale_after`, then
/// fades linearly to neutral, reaching it `decay_time` after the last input.
class SessionCore {
public:
    explicit SessionCore(const AppConfig& config);

    /// A frame that arrived from the client at session time `now`.
    void receive(std::string_view frame, double now);

    /// Runs every physics tick with time <= now.
    void advance_to(double now);

    /// Frames whose delivery time is <= now, in order.
    std::vector<std::string> take_outbound(double now);

    /// Greeting sent immediately on connect.
    std::string hello() const;

    /// True after a protocol-version mismatch; the transport should send the
    /// pending frames and close.
    bool refused() const { return refused_; }

    double time() const { return static_cast<double>(tick_) * dt_; }
    std::uint64_t ticks() const { return tick_; }
    double next_outbound_time() const { return downstream_.next_delivery(); }
    SessionPhase phase() const { return phase_; }
    const TrialSimulation* simulation() const { return sim_.get(); }
    const OperatorState& neutral() const { return neutral_; }
    /// Operator state applied on the most recent tick.
    const OperatorState& applied() const { return applied_; }
    const std::optional<TrialRecord>& last_record() const { return last_record_; }
    const SessionSettings& settings() const { return config_.session; }

private:
    void send(const nlohmann::json& msg, double now);
    void error(const std::string& code, const std::string& message, double now);
    void handle(const ClientMessage& msg, double arrival, double now);
    void select(const SelectTrial& sel, double now);
    void start(double now);
    void finish(double now);
    OperatorState current_command(double now) const;
    void broadcast(double now);

    AppConfig config_;
    double dt_;
    std::uint64_t tick_ = 0;
    std::uint64_t broadcast_every_ = 17;

    struct Inbound {
        ClientMessage msg;
        double arrival;
    };
    LatencyQueue<Inbound> upstream_;
    LatencyQueue<std::string> downstream_;
    bool refused_ = false;

    SessionPhase phase_ = SessionPhase::Idle;
    SelectTrial selection_;
    std::unique_ptr<TrialSimulation> sim_;
    std::optional<TrialRecord> last_record_;
    CommandTape tape_;
    double trial_start_ = 0.0;

    NeutralCalibrator calibrator_;
    OperatorState neutral_;
    OperatorState applied_;
    std::optional<OperatorInput> latest_input_;
    double latest_input_time_ = 0.0;  // session time at which it was delivered
    double last_input_t_ = -1e300;     // client timestamp ordering check
    bool input_fresh_ = false;
};

}  // namespace telewip
