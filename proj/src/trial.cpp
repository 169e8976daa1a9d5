#include "telewip/trial.hpp"

#include "telewip/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace telewip {

void TrialConfig::validate() const {
    wip.validate();
    force.validate();
    if (!(robot_radius > 0.0)) throw std::invalid_argument("robot_radius must be > 0");
    if (!(physics_dt > 0.0)) throw std::invalid_argument("physics_dt must be > 0");
    if (!(timeout > 0.0)) throw std::invalid_argument("timeout must be > 0");
    if (!(sample_rate > 0.0) || sample_rate * physics_dt > 1.0) throw std::invalid_argument("bad sample_rate");
    if (!(activation_fh > 0.0)) throw std::invalid_argument("activation_fh must be > 0");
}

FeedbackMode TrialConfig::feedback_mode(FeedbackKind kind) const {
    return FeedbackMode(kind, force.p0, activation_fh);
}

std::string_view to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::Running: return "running";
        case Outcome::Success: return "success";
        case Outcome::Timeout: return "timeout";
        case Outcome::Aborted: return "aborted";
    }
    return "running";
}

Outcome parse_outcome(std::string_view text) {
    if (text == "running") return Outcome::Running;
    if (text == "success") return Outcome::Success;
    if (text == "timeout") return Outcome::Timeout;
    if (text == "aborted") return Outcome::Aborted;
    throw std::invalid_argument("unknown outcome '" + std::string(text) + "'");
}

OperatorState TapePlayer::at(double t) {
    const auto& e = tape_->entries;
    while (cursor_ < e.size() && e[cursor_].t <= t) ++cursor_;
    OperatorState op;
    op.x_h0 = tape_->x_h0;
    op.y_h0 = tape_->y_h0;
    op.calibrated = true;
    if (cursor_ == 0) {
        op.x_h = op.x_h0;
        op.y_h = op.y_h0;
    } else {
        op.x_h = e[cursor_ - 1].x_h;
        op.y_h = e[cursor_ - 1].y_h;
    }
    return op;
}

bool TapePlayer::hold() const { return cursor_ > 0 && tape_->entries[cursor_ - 1].hold; }

TrialSimulation::TrialSimulation(MapSpec map, FeedbackMode mode, TrialConfig config)
    : map_(std::move(map)),
      mode_(mode),
      config_(std::move(config)),
      controller_(config_.wip, config_.controller),
      obstacles_(map_.obstacles) {
    config_.validate();
    robot_.x = map_.start.x;
    robot_.y = map_.start.y;
    robot_.yaw = normalize_angle(map_.start.yaw);
    max_x_ = robot_.x;
    sample_every_ = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(
                                                   std::llround(1.0 / (config_.sample_rate * config_.physics_dt))));
    sample();
}

void TrialSimulation::sample() {
    if (!trajectory_.empty() && trajectory_.back().t == time()) return;
    trajectory_.push_back({time(), robot_});
}

void TrialSimulation::abort(std::string reason) {
    if (finished()) return;
    outcome_ = Outcome::Aborted;
    abort_reason_ = std::move(reason);
    end_time_ = time();
    sample();
}

void TrialSimulation::apply_contacts(const std::vector<Contact>& contacts) {
    // Inelastic impact at `contact_height` above the axle: the contact point's
    // approach speed along the normal is removed through the coupled
    // wheel/pitch mass matrix.
    const WipParams& p = config_.wip;
    const double l = p.pendulum_length();
    const double wheel_inertia = 0.5 * p.wheel_mass * p.wheel_radius * p.wheel_radius;
    const double a = p.body_mass + 2.0 * p.wheel_mass + 2.0 * wheel_inertia / (p.wheel_radius * p.wheel_radius);
    const double b = p.body_mass * l;
    const double c = p.body_pitch_inertia + p.body_mass * l * l;

    for (const Contact& contact : contacts) {
        Vec2 velocity_obstacle{};
        if (contact.target == CollisionTarget::Obstacle) {
            for (const Obstacle& o : obstacles_) {
                if (o.id == contact.id) velocity_obstacle = o.velocity;
            }
        }
        robot_.x -= contact.penetration * contact.normal.x;
        robot_.y -= contact.penetration * contact.normal.y;

        const double cs = std::cos(robot_.pitch);
        const double b_c = b * cs;
        const double det = a * c - b_c * b_c;
        const double w1 = 1.0;
        const double w2 = config_.contact_height * cs;
        // M^-1 w
        const double mw1 = (c * w1 - b_c * w2) / det;
        const double mw2 = (-b_c * w1 + a * w2) / det;
        const double k = w1 * mw1 + w2 * mw2;

        const Vec2 heading{std::cos(robot_.yaw), std::sin(robot_.yaw)};
        const double hn = dot(heading, contact.normal);
        const double point_speed = robot_.v + config_.contact_height * cs * robot_.pitch_rate;
        const double closing = hn * point_speed - dot(velocity_obstacle, contact.normal);
        if (closing <= 0.0 || hn == 0.0) continue;
        const double du = -closing * hn;
        robot_.v += mw1 * du / k;
        robot_.pitch_rate += mw2 * du / k;
    }
}

void TrialSimulation::step(const OperatorState& op, bool hold) {
    if (finished()) return;
    const double dt = config_.physics_dt;

    const double reach = mode_.max_activation();
    if (reach > 0.0) {
        observe(robot_, config_.robot_radius, obstacles_, map_.walls, reach, observations_);
    } else {
        observations_.clear();
    }
    const OperatorState held = clamp_travel(op, config_.limits.travel_limit);
    const VelocityCommand command = map_com_to_velocity(held, config_.mapping);
    last_output_ = apply_mode(mode_, command, held, observations_, config_.force, config_.limits);
    if (hold) {
        last_output_.v_d = 0.0;
        last_output_.yaw_rate_d = 0.0;
        last_output_.yaw_rate_star = 0.0;
    }

    const WheelTorques torques = controller_.update(robot_, last_output_.v_d, last_output_.yaw_rate_star, dt);
    robot_ = telewip::step(robot_, torques, config_.wip, dt);
    ++ticks_;
    step_obstacles(obstacles_, map_.bounds, dt);

    const double t = time();
    const auto events = monitor_.check(robot_, config_.robot_radius, obstacles_, map_.walls, t);
    collisions_.insert(collisions_.end(), events.begin(), events.end());
    if (config_.contact_response) {
        const auto contacts = find_contacts(robot_, config_.robot_radius, obstacles_, map_.walls);
        if (!contacts.empty()) apply_contacts(contacts);
    }

    const Vec2 pos{robot_.x, robot_.y};
    while (next_midpoint_ < map_.midpoints.size() &&
           norm(pos - map_.midpoints[next_midpoint_]) <= config_.midpoint_radius) {
        ++next_midpoint_;
    }
    max_x_ = std::max(max_x_, robot_.x);

    if (robot_.fallen) {
        outcome_ = Outcome::Aborted;
        abort_reason_ = "fall";
    } else if (next_midpoint_ == map_.midpoints.size() && robot_.x >= map_.goal_x) {
        outcome_ = Outcome::Success;
    } else if (t >= config_.timeout - 0.5 * dt) {
        outcome_ = Outcome::Timeout;
    }
    if (finished()) {
        end_time_ = t;
        sample();
    } else if (ticks_ % sample_every_ == 0) {
        sample();
    }
}

TrialRecord TrialSimulation::record() const {
    TrialRecord rec;
    rec.map = map_.name;
    rec.map_seed = map_.seed;
    rec.start_x = map_.start.x;
    rec.goal_x = map_.goal_x;
    rec.mode = mode_.kind();
    rec.activation_fc = mode_.activation_fc();
    rec.activation_fh = mode_.activation_fh();
    rec.config = config_;
    rec.trajectory = trajectory_;
    if (!finished() && (trajectory_.empty() || trajectory_.back().t != time())) {
        rec.trajectory.push_back({time(), robot_});
    }
    rec.collisions = collisions_;
    rec.outcome = outcome_;
    rec.abort_reason = abort_reason_;
    rec.midpoints_total = static_cast<int>(map_.midpoints.size());
    rec.midpoints_visited = static_cast<int>(next_midpoint_);
    rec.end_time = finished() ? end_time_ : time();
    rec.metrics = compute_metrics(rec);
    return rec;
}

TrialRecord run_trial(const MapSpec& map, FeedbackKind mode, const OperatorParams& op, const TrialConfig& config,
                      CommandTape* tape) {
    TrialSimulation sim(map, config.feedback_mode(mode), config);
    SyntheticOperator driver(sim.map(), op, config.mapping, config.force, config.robot_radius);
    if (tape) *tape = CommandTape{};
    while (!sim.finished()) {
        const OperatorState cmd = driver.tick(sim.robot(), sim.last_hmi(), sim.time(), sim.obstacles());
        if (tape) tape->entries.push_back({sim.time(), cmd.x_h, cmd.y_h});
        sim.step(cmd);
    }
    TrialRecord rec = sim.record();
    rec.operator_source = "synthetic";
    rec.operator_params = op;
    return rec;
}

TrialRecord run_tape(const MapSpec& map, FeedbackKind mode, const CommandTape& tape, const TrialConfig& config) {
    TrialSimulation sim(map, config.feedback_mode(mode), config);
    TapePlayer player(tape);
    while (!sim.finished()) {
        const OperatorState op = player.at(sim.time());
        sim.step(op, player.hold());
    }
    TrialRecord rec = sim.record();
    rec.operator_source = "tape";
    rec.tape = tape;
    return rec;
}

}  // namespace telewip
