#include "telewip/session.hpp"

#include "telewip/record_io.hpp"

#include <algorithm>
#include <cmath>

namespace telewip {

using nlohmann::json;

std::string_view to_string(SessionPhase phase) {
    switch (phase) {
        case SessionPhase::Idle: return "idle";
        case SessionPhase::Calibrating: return "calibrating";
        case SessionPhase::Ready: return "ready";
        case SessionPhase::Running: return "running";
        case SessionPhase::Finished: return "finished";
    }
    return "idle";
}

namespace {

LatencyModel latency_of(const SessionSettings& s) { return {s.latency_min_ms * 1e-3, s.latency_max_ms * 1e-3}; }

}  // namespace

SessionCore::SessionCore(const AppConfig& config)
    : config_(config),
      dt_(1.0 / config.session.physics_rate),
      upstream_(latency_of(config.session), config.session.latency_seed),
      downstream_(latency_of(config.session), config.session.latency_seed ^ 0x5bd1e995ULL),
      calibrator_(config.session.calibration_window) {
    config_.session.validate();
    config_.trial.validate();
    // The trial runs at the session's physics rate.
    config_.trial.physics_dt = dt_;
    broadcast_every_ = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::llround(config_.session.physics_rate / config_.session.broadcast_rate)));
    selection_ = {config_.session.map, config_.session.mode, config_.session.seed};
}

std::string SessionCore::hello() const { return hello_json(config_to_json(config_)["session"]).dump(); }

void SessionCore::send(const json& msg, double now) { downstream_.push(now, msg.dump()); }

void SessionCore::error(const std::string& code, const std::string& message, double now) {
    send(to_json(ErrorMessage{code, message}), now);
}

void SessionCore::receive(std::string_view frame, double now) {
    if (refused_) return;
    try {
        ClientMessage msg = parse_client_message(frame);
        upstream_.push(now, Inbound{std::move(msg), now});
    } catch (const WireError& e) {
        error(e.code(), e.what(), now);
        if (e.code() == "protocol_version") refused_ = true;
    }
}

std::vector<std::string> SessionCore::take_outbound(double now) { return downstream_.pop_ready(now); }

void SessionCore::select(const SelectTrial& sel, double now) {
    if (phase_ == SessionPhase::Running) {
        error("busy", "a trial is running", now);
        return;
    }
    selection_ = sel;
    if (phase_ == SessionPhase::Finished) phase_ = SessionPhase::Ready;
}

void SessionCore::start(double now) {
    if (phase_ == SessionPhase::Running) {
        error("busy", "a trial is already running", now);
        return;
    }
    if (!neutral_.calibrated) {
        error("not_calibrated", "calibrate the neutral stance first", now);
        return;
    }
    try {
        MapSpec map = make_map(selection_.map, selection_.seed, config_.trial.map);
        sim_ = std::make_unique<TrialSimulation>(std::move(map), config_.trial.feedback_mode(selection_.mode),
                                                 config_.trial);
    } catch (const std::exception& e) {
        error("start_failed", e.what(), now);
        return;
    }
    tape_ = CommandTape{neutral_.x_h0, neutral_.y_h0, {}};
    trial_start_ = now;
    phase_ = SessionPhase::Running;
}

void SessionCore::finish(double now) {
    TrialRecord rec = sim_->record();
    rec.operator_source = "live";
    rec.tape = tape_;
    json summary = {{"map", std::string(to_string(rec.map))},
                    {"map_seed", rec.map_seed},
                    {"mode", std::string(to_string(rec.mode))},
                    {"outcome", std::string(to_string(rec.outcome))},
                    {"abort_reason", rec.abort_reason},
                    {"end_time", rec.end_time},
                    {"completion_time", rec.metrics.completion_time ? json(*rec.metrics.completion_time) : json(nullptr)},
                    {"completed_distance", rec.metrics.completed_distance},
                    {"collisions", rec.metrics.collisions},
                    {"obstacle_collisions", rec.metrics.obstacle_collisions},
                    {"wall_collisions", rec.metrics.wall_collisions},
                    {"success", rec.outcome == Outcome::Success}};
    send(envelope("trial_result", {{"summary", summary}, {"record", trial_to_json(rec)}}), now);
    last_record_ = std::move(rec);
    phase_ = SessionPhase::Finished;
}

void SessionCore::handle(const ClientMessage& msg, double arrival, double now) {
    if (const auto* in = std::get_if<OperatorInput>(&msg)) {
        if (!(in->t > last_input_t_)) {
            error("out_of_order", "operator_input timestamps must increase", now);
            return;
        }
        last_input_t_ = in->t;
        latest_input_ = *in;
        latest_input_time_ = now;
        input_fresh_ = true;
        if (phase_ == SessionPhase::Calibrating) calibrator_.add_sample(now, in->x_h, in->y_h);
    } else if (const auto* cal = std::get_if<Calibrate>(&msg)) {
        if (phase_ == SessionPhase::Running) {
            error("busy", "cannot calibrate during a trial", now);
        } else if (cal->x_h0) {
            neutral_ = {*cal->x_h0, *cal->y_h0, *cal->x_h0, *cal->y_h0, true};
            phase_ = SessionPhase::Ready;
        } else {
            calibrator_.start(now);
            phase_ = SessionPhase::Calibrating;
        }
    } else if (const auto* sel = std::get_if<SelectTrial>(&msg)) {
        select(*sel, now);
    } else if (std::holds_alternative<StartTrial>(msg)) {
        start(now);
    } else if (std::holds_alternative<AbortTrial>(msg)) {
        if (phase_ != SessionPhase::Running) {
            error("not_running", "no trial to abort", now);
        } else {
            sim_->abort("operator");
            finish(now);
        }
    } else if (const auto* probe = std::get_if<Probe>(&msg)) {
        send(to_json(ProbeEcho{probe->id, probe->t, now - arrival, now}), now);
    }
}

OperatorState SessionCore::current_command(double now) const {
    OperatorState op = neutral_;
    op.x_h = neutral_.x_h0;
    op.y_h = neutral_.y_h0;
    if (!latest_input_) return op;
    const SessionSettings& s = config_.session;
    const double age = now - latest_input_time_;
    const double keep = std::clamp((s.decay_time - age) / (s.decay_time - s.stale_after), 0.0, 1.0);
    op.x_h = neutral_.x_h0 + keep * (latest_input_->x_h - neutral_.x_h0);
    op.y_h = neutral_.y_h0 + keep * (latest_input_->y_h - neutral_.y_h0);
    return op;
}

void SessionCore::broadcast(double now) {
    StateUpdate u;
    u.t = now;
    u.phase = std::string(to_string(phase_));
    u.outcome = "running";
    u.map = std::string(to_string(selection_.map));
    u.mode = std::string(to_string(selection_.mode));
    u.seed = selection_.seed;
    if (sim_) {
        const WipState& r = sim_->robot();
        u.trial_t = sim_->time();
        u.x = r.x;
        u.y = r.y;
        u.yaw = r.yaw;
        u.pitch = r.pitch;
        u.v = r.v;
        u.yaw_rate = r.yaw_rate;
        const double reach = config_.session.nearby_radius;
        for (const Obstacle& o : sim_->obstacles()) {
            if (norm(o.center - Vec2{r.x, r.y}) - o.radius <= reach) u.obstacles.push_back({o.id, o.center.x, o.center.y, o.radius});
        }
        u.v_d = sim_->last_output().v_d;
        u.yaw_rate_star = sim_->last_output().yaw_rate_star;
        u.in_contact = sim_->in_contact();
        u.collisions = static_cast<int>(sim_->collisions().size());
        u.outcome = std::string(to_string(sim_->outcome()));
        u.midpoints_visited = sim_->midpoints_visited();
        u.midpoints_total = static_cast<int>(sim_->map().midpoints.size());
        const MapSpec& m = sim_->map();
        u.progress = std::clamp((sim_->max_progress_x() - m.start.x) / (m.goal_x - m.start.x), 0.0, 1.0);
    }
    send(to_json(u), now);
}

void SessionCore::advance_to(double now) {
    if (refused_) return;
    const SessionSettings& s = config_.session;
    while (time() <= now) {
        const double t = time();
        input_fresh_ = false;
        for (Inbound& in : upstream_.pop_ready(t)) handle(in.msg, in.arrival, t);

        if (phase_ == SessionPhase::Calibrating) {
            if (calibrator_.finished(t)) {
                neutral_ = calibrator_.result();
                phase_ = SessionPhase::Ready;
            } else if (t - calibrator_.start_time() > 2.0 * s.calibration_window) {
                error("calibration_failed", "no operator_input during calibration", t);
                phase_ = neutral_.calibrated ? SessionPhase::Ready : SessionPhase::Idle;
            }
        }

        if (phase_ == SessionPhase::Running) {
            const OperatorState op = current_command(t);
            const bool hold = !latest_input_ || t - latest_input_time_ >= s.decay_time;
            const bool changed = tape_.entries.empty() || tape_.entries.back().x_h != op.x_h ||
                                 tape_.entries.back().y_h != op.y_h || tape_.entries.back().hold != hold;
            if (input_fresh_ || changed) tape_.entries.push_back({sim_->time(), op.x_h, op.y_h, hold});
            applied_ = op;
            sim_->step(op, hold);
            const HmiForceCommand& f = sim_->last_hmi();
            send(to_json(ForceFeedback{t, f.f_x, f.f_y}), t);
            if (sim_->finished()) finish(t);
        }

        if (tick_ % broadcast_every_ == 0) broadcast(t);
        ++tick_;
    }
}

}  // namespace telewip
