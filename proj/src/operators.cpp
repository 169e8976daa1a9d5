#include "telewip/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <string>

namespace telewip {

std::string_view to_string(OperatorPolicy policy) {
    return policy == OperatorPolicy::PurePursuit ? "PurePursuit" : "NoisyPurePursuit";
}

OperatorPolicy parse_operator_policy(std::string_view text) {
    if (text == "PurePursuit" || text == "pure_pursuit") return OperatorPolicy::PurePursuit;
    if (text == "NoisyPurePursuit" || text == "noisy_pure_pursuit") return OperatorPolicy::NoisyPurePursuit;
    throw std::invalid_argument("unknown operator policy '" + std::string(text) + "'");
}

void OperatorParams::validate() const {
    if (!(lookahead > 0.0)) throw std::invalid_argument("operator lookahead must be > 0");
    if (!(reaction_delay >= 0.0)) throw std::invalid_argument("operator reaction_delay must be >= 0");
    if (!(admittance >= 0.0)) throw std::invalid_argument("operator admittance must be >= 0");
    if (!(noise_std >= 0.0) || !(noise_time_constant > 0.0)) throw std::invalid_argument("bad operator noise");
    if (!(vision_radius > 0.0) || !(cruise_speed > 0.0)) throw std::invalid_argument("bad operator speed/vision");
    if (!(replan_period > 0.0) || !(grid_resolution > 0.0)) throw std::invalid_argument("bad operator planner");
    if (!(memory >= 0.0)) throw std::invalid_argument("operator memory must be >= 0");
    if (!(caution_time >= 0.0)) throw std::invalid_argument("operator caution_time must be >= 0");
}

double effective_vision_radius(const MapSpec& map, double vision_radius) {
    return vision_radius * map.brightness;
}

std::vector<Obstacle> visible_obstacles(std::span<const Obstacle> obstacles, const Pose& from, double vision_radius) {
    std::vector<Obstacle> seen;
    const Vec2 c{from.x, from.y};
    const Vec2 heading{std::cos(from.yaw), std::sin(from.yaw)};
    const bool everything = std::isinf(vision_radius);
    for (const Obstacle& o : obstacles) {
        const Vec2 d = o.center - c;
        if (everything || (norm(d) - o.radius <= vision_radius && dot(d, heading) >= -o.radius)) seen.push_back(o);
    }
    return seen;
}

// ---------------------------------------------------------------------------

GridPlanner::GridPlanner(const MapSpec& map, const PlannerParams& params) : map_(&map), params_(params) {
    const Bounds& b = map.bounds;
    nx_ = static_cast<int>(std::ceil((b.x_max - b.x_min) / params.resolution));
    ny_ = static_cast<int>(std::ceil((b.y_max - b.y_min) / params.resolution));
    const std::size_t n = static_cast<std::size_t>(nx_) * ny_;
    blocked_.assign(n, 0);
    cost_.assign(n, 0.0);
    parent_.assign(n, -1);
    closed_.assign(n, 0);
}

bool GridPlanner::segment_clear(Vec2 a, Vec2 b, std::span<const Obstacle> visible) const {
    const double margin = params_.footprint_radius + 0.5 * params_.clearance;
    for (const Obstacle& o : visible) {
        if (segment_intersects_disc(a, b, o.center, o.radius + margin)) return false;
    }
    for (const Wall& w : map_->walls) {
        // Walls never cross the free space between waypoints, so endpoint
        // distances bound the segment-to-wall distance.
        const double d = std::min({point_segment_distance(a, w.a, w.b), point_segment_distance(b, w.a, w.b),
                                   point_segment_distance(w.a, a, b), point_segment_distance(w.b, a, b)});
        if (d < margin) return false;
    }
    return true;
}

std::vector<Vec2> GridPlanner::plan(std::span<const Obstacle> visible, Vec2 from, std::size_t next_midpoint) {
    const Bounds& b = map_->bounds;
    const double h = params_.resolution;
    const double inflate = params_.footprint_radius + params_.clearance;
    auto cx = [&](int i) { return b.x_min + (i + 0.5) * h; };
    auto cy = [&](int j) { return b.y_min + (j + 0.5) * h; };
    auto idx = [&](int i, int j) { return j * nx_ + i; };

    for (int j = 0; j < ny_; ++j) {
        const double y = cy(j);
        const bool wall = y - b.y_min < inflate || b.y_max - y < inflate;
        for (int i = 0; i < nx_; ++i) {
            const double x = cx(i);
            blocked_[idx(i, j)] = wall || x - b.x_min < inflate;
        }
    }
    for (const Obstacle& o : visible) {
        const double reach = o.radius + inflate;
        const int i0 = std::max(0, static_cast<int>(std::floor((o.center.x - reach - b.x_min) / h)));
        const int i1 = std::min(nx_ - 1, static_cast<int>(std::ceil((o.center.x + reach - b.x_min) / h)));
        const int j0 = std::max(0, static_cast<int>(std::floor((o.center.y - reach - b.y_min) / h)));
        const int j1 = std::min(ny_ - 1, static_cast<int>(std::ceil((o.center.y + reach - b.y_min) / h)));
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                if (norm_sq(Vec2{cx(i), cy(j)} - o.center) < reach * reach) blocked_[idx(i, j)] = 1;
    }

    auto cell_of = [&](Vec2 p) {
        const int i = std::clamp(static_cast<int>((p.x - b.x_min) / h), 0, nx_ - 1);
        const int j = std::clamp(static_cast<int>((p.y - b.y_min) / h), 0, ny_ - 1);
        return idx(i, j);
    };

    // Single A* leg from `start` to the first cell satisfying the target.
    struct Target {
        bool line;
        Vec2 point;
    };
    auto leg = [&](int start, const Target& target) -> std::vector<int> {
        auto heuristic = [&](int c) {
            const Vec2 p{cx(c % nx_), cy(c / nx_)};
            if (target.line) return std::max(0.0, map_->goal_x - p.x);
            return std::max(0.0, norm(p - target.point) - 0.25 * params_.midpoint_radius);
        };
        auto reached = [&](int c) {
            const Vec2 p{cx(c % nx_), cy(c / nx_)};
            if (target.line) return p.x >= map_->goal_x;
            return norm(p - target.point) <= 0.25 * params_.midpoint_radius + 0.5 * h;
        };
        std::fill(cost_.begin(), cost_.end(), std::numeric_limits<double>::infinity());
        std::fill(closed_.begin(), closed_.end(), 0);
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
        cost_[start] = 0.0;
        parent_[start] = -1;
        open.emplace(heuristic(start), start);
        const int di[] = {1, -1, 0, 0, 1, 1, -1, -1};
        const int dj[] = {0, 0, 1, -1, 1, -1, 1, -1};
        while (!open.empty()) {
            const int c = open.top().second;
            open.pop();
            if (closed_[c]) continue;
            closed_[c] = 1;
            if (reached(c)) {
                std::vector<int> cells;
                for (int k = c; k != -1; k = parent_[k]) cells.push_back(k);
                std::reverse(cells.begin(), cells.end());
                return cells;
            }
            const int i = c % nx_, j = c / nx_;
            for (int k = 0; k < 8; ++k) {
                const int ni = i + di[k], nj = j + dj[k];
                if (ni < 0 || nj < 0 || ni >= nx_ || nj >= ny_) continue;
                const int n = idx(ni, nj);
                if (blocked_[n] || closed_[n]) continue;
                if (k >= 4 && (blocked_[idx(ni, j)] || blocked_[idx(i, nj)])) continue;
                const double g = cost_[c] + (k < 4 ? h : h * std::numbers::sqrt2);
                if (g < cost_[n]) {
                    cost_[n] = g;
                    parent_[n] = c;
                    open.emplace(g + heuristic(n), n);
                }
            }
        }
        return {};
    };

    // Escape to the nearest free cell when the robot sits inside an inflated zone.
    int start = cell_of(from);
    if (blocked_[start]) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        const int r = static_cast<int>(std::ceil(2.0 * inflate / h)) + 2;
        const int si = start % nx_, sj = start / nx_;
        for (int j = std::max(0, sj - r); j <= std::min(ny_ - 1, sj + r); ++j)
            for (int i = std::max(0, si - r); i <= std::min(nx_ - 1, si + r); ++i) {
                if (blocked_[idx(i, j)]) continue;
                const double d = norm_sq(Vec2{cx(i), cy(j)} - from);
                if (d < best_d) {
                    best_d = d;
                    best = idx(i, j);
                }
            }
        if (best >= 0) start = best;
    }

    std::vector<Vec2> points{from};
    std::vector<std::size_t> pinned;
    if (start != cell_of(from)) points.push_back({cx(start % nx_), cy(start / nx_)});
    for (std::size_t m = next_midpoint; m <= map_->midpoints.size(); ++m) {
        const Target target = m < map_->midpoints.size() ? Target{false, map_->midpoints[m]} : Target{true, {}};
        const std::vector<int> cells = blocked_[start] ? std::vector<int>{} : leg(start, target);
        if (cells.empty()) {
            if (points.size() > 1) break;
            const Vec2 probe{std::min(from.x + params_.lookahead, b.x_max - params_.footprint_radius), from.y};
            return {probe};
        }
        for (std::size_t k = 1; k < cells.size(); ++k) points.push_back({cx(cells[k] % nx_), cy(cells[k] / nx_)});
        if (cells.size() == 1) points.push_back({cx(start % nx_), cy(start / nx_)});
        if (m < map_->midpoints.size()) pinned.push_back(points.size() - 1);
        start = cells.back();
    }

    // Line-of-sight smoothing that never skips a midpoint arrival.
    std::vector<Vec2> waypoints;
    std::size_t anchor = 0;
    while (anchor + 1 < points.size()) {
        std::size_t next = anchor + 1;
        std::size_t last = points.size() - 1;
        for (std::size_t k : pinned)
            if (k > anchor) {
                last = k;
                break;
            }
        for (std::size_t k = last; k > anchor + 1; --k) {
            if (segment_clear(points[anchor], points[k], visible)) {
                next = k;
                break;
            }
        }
        waypoints.push_back(points[next]);
        anchor = next;
    }
    if (waypoints.empty()) waypoints.push_back(points.back());
    return waypoints;
}

std::vector<Vec2> plan_waypoints(const MapSpec& map, std::span<const Obstacle> obstacles, const Pose& from,
                                 std::size_t next_midpoint, double vision_radius, const PlannerParams& params) {
    const std::vector<Obstacle> seen = visible_obstacles(obstacles, from, effective_vision_radius(map, vision_radius));
    GridPlanner planner(map, params);
    return planner.plan(seen, {from.x, from.y}, next_midpoint);
}

// ---------------------------------------------------------------------------

namespace {

PlannerParams planner_params(const OperatorParams& p, double footprint) {
    PlannerParams pp;
    pp.footprint_radius = footprint;
    pp.clearance = p.clearance;
    pp.resolution = p.grid_resolution;
    pp.lookahead = p.lookahead;
    return pp;
}

double wrap(double a) { return normalize_angle(a); }

}  // namespace

SyntheticOperator::SyntheticOperator(const MapSpec& map, const OperatorParams& params,
                                     const VelocityMapping& mapping, const ForceParams& force,
                                     double footprint_radius)
    : map_(&map),
      params_(params),
      mapping_(mapping),
      force_(force),
      planner_(map, planner_params(params, footprint_radius)),
      vision_(effective_vision_radius(map, params.vision_radius)),
      cruise_(params.cruise_speed),
      rng_(params.seed) {
    params_.validate();
    if (params_.caution_time > 0.0) cruise_ = std::min(params_.cruise_speed, vision_ / params_.caution_time);
}

const WipState& SyntheticOperator::perceived(const WipState& robot, double t) {
    history_.push_back({t, robot});
    const double horizon = t - params_.reaction_delay;
    while (history_.size() > 1 && history_[1].t <= horizon + 1e-12) history_.pop_front();
    return history_.front().state;
}

bool SyntheticOperator::perceive(const WipState& seen, double t, std::span<const Obstacle> obstacles) {
    const Vec2 pos{seen.x, seen.y};
    const Vec2 heading{std::cos(seen.yaw), std::sin(seen.yaw)};
    bool changed = false;
    for (const Obstacle& o : obstacles) {
        const auto id = static_cast<std::size_t>(o.id);
        if (id >= seen_at_.size()) {
            seen_at_.resize(id + 1, -std::numeric_limits<double>::infinity());
            known_.resize(id + 1);
        }
        // Where the operator last saw it.
        const Vec2 c = o.center - params_.reaction_delay * o.velocity;
        const Vec2 d = c - pos;
        if (std::isinf(vision_) || (norm(d) - o.radius <= vision_ && dot(d, heading) >= -o.radius)) {
            changed |= std::isinf(seen_at_[id]);
            seen_at_[id] = t;
            known_[id] = o;
            known_[id].center = c;
        } else if (!std::isinf(seen_at_[id]) && o.kind == ObstacleKind::Dynamic && t - seen_at_[id] > params_.memory) {
            seen_at_[id] = -std::numeric_limits<double>::infinity();
            changed = true;
        }
    }
    return changed;
}

void SyntheticOperator::replan(const WipState& seen) {
    known_scratch_.clear();
    for (std::size_t i = 0; i < known_.size(); ++i) {
        if (!std::isinf(seen_at_[i])) known_scratch_.push_back(known_[i]);
    }
    waypoints_ = planner_.plan(known_scratch_, {seen.x, seen.y}, next_midpoint_);
    if (next_midpoint_ >= map_->midpoints.size() && !waypoints_.empty() && waypoints_.back().x >= map_->goal_x) {
        waypoints_.push_back({waypoints_.back().x + params_.lookahead, waypoints_.back().y});
    }
}

Vec2 SyntheticOperator::pursuit_target(Vec2 position) const {
    // The lookahead point slides along the path but stops at corners sharper
    // than about 30 degrees so that turns are not cut across obstacles.
    double remaining = params_.lookahead;
    Vec2 prev = position;
    for (std::size_t i = 0; i < waypoints_.size(); ++i) {
        const Vec2 w = waypoints_[i];
        const double len = norm(w - prev);
        if (len >= remaining) return prev + (remaining / len) * (w - prev);
        remaining -= len;
        if (i + 1 < waypoints_.size() && len > 1e-9) {
            const Vec2 next = waypoints_[i + 1] - w;
            const double next_len = norm(next);
            if (next_len > 1e-9 && dot(w - prev, next) < 0.866 * len * next_len) return w;
        }
        prev = w;
    }
    return prev;
}

OperatorState SyntheticOperator::tick(const WipState& robot, const HmiForceCommand& hmi, double t,
                                      std::span<const Obstacle> obstacles) {
    const double dt = started_ ? std::max(0.0, t - last_t_) : 0.0;
    if (!started_) {
        started_ = true;
        next_replan_ = t;
    }
    last_t_ = t;

    const WipState seen = perceived(robot, t);
    const Vec2 pos{seen.x, seen.y};

    bool force_replan = false;
    while (next_midpoint_ < map_->midpoints.size() &&
           norm(pos - map_->midpoints[next_midpoint_]) <= 0.6 * planner_.params().midpoint_radius) {
        ++next_midpoint_;
        force_replan = true;
    }
    if (t + 1e-12 >= next_perception_) {
        next_perception_ = t + 0.05;
        force_replan |= perceive(seen, t, obstacles);
    }
    if (force_replan || waypoints_.empty() || t + 1e-12 >= next_replan_) {
        replan(seen);
        next_replan_ = t + params_.replan_period;
    }
    while (waypoints_.size() > 1 && norm(waypoints_.front() - pos) < 0.3) waypoints_.erase(waypoints_.begin());

    const Vec2 target = pursuit_target(pos);
    const Vec2 to_target = target - pos;
    const double error = norm(to_target) > 1e-9 ? wrap(std::atan2(to_target.y, to_target.x) - seen.yaw) : 0.0;
    // Targets well behind are handled by turning on the spot.
    const bool behind = std::abs(error) > 0.5 * std::numbers::pi;
    double v_des = behind ? 0.0 : cruise_ * std::max(0.2, std::cos(error));
    // Slow down ahead of sharp corners.
    {
        Vec2 prev = pos;
        double travelled = 0.0;
        for (std::size_t i = 0; i + 1 < waypoints_.size() && travelled < 1.0; ++i) {
            const Vec2 in = waypoints_[i] - prev;
            const Vec2 out = waypoints_[i + 1] - waypoints_[i];
            travelled += norm(in);
            if (travelled >= 1.0) break;
            const double lengths = norm(in) * norm(out);
            if (lengths > 1e-12) v_des = std::min(v_des, cruise_ * std::max(0.3, dot(in, out) / lengths));
            prev = waypoints_[i];
        }
    }
    double omega = behind ? std::copysign(1.0, error)
                          : std::clamp(2.0 * std::max(v_des, 0.3) * std::sin(error) / params_.lookahead,
                                       -mapping_.yaw.max_output, mapping_.yaw.max_output);

    // Pressed against something ahead: turn on the spot to run along its edge.
    const Vec2 heading{std::cos(seen.yaw), std::sin(seen.yaw)};
    const double footprint = planner_.params().footprint_radius;
    Vec2 pressed{};
    double pressed_gap = 0.05;
    auto press = [&](Vec2 toward, double gap) {
        const double n = norm(toward);
        if (n < 1e-9 || gap >= pressed_gap || dot(heading, toward) < 0.2 * n) return;
        pressed = (1.0 / n) * toward;
        pressed_gap = gap;
    };
    for (const Obstacle& o : known_scratch_) press(o.center - pos, norm(o.center - pos) - o.radius - footprint);
    for (const Wall& w : map_->walls) {
        const Vec2 q = closest_point_on_segment(pos, w.a, w.b);
        press(q - pos, norm(q - pos) - footprint);
    }
    if (norm(pressed) > 0.0 && !behind) {
        Vec2 along{-pressed.y, pressed.x};
        if (dot(along, to_target) < 0.0) along = -1.0 * along;
        const double turn = wrap(std::atan2(along.y, along.x) - seen.yaw);
        if (std::abs(turn) > 0.15) {
            v_des = 0.0;
            omega = std::clamp(1.5 * turn, -1.0, 1.0);
        }
    }

    if (v_des > 0.15 && std::abs(seen.v) < 0.05) {
        if (stalled_since_ < 0.0) stalled_since_ = t;
        if (t - stalled_since_ > 1.0) {
            backing_until_ = t + 1.5;
            stalled_since_ = -1.0;
        }
    } else {
        stalled_since_ = -1.0;
    }
    if (t < backing_until_) {
        v_des = -0.3;
        omega = std::clamp(1.5 * error, -1.0, 1.0);
        next_replan_ = std::min(next_replan_, backing_until_);
    }

    // Lean through the HMI springs so the intended displacement is reached.
    const double a = params_.admittance;
    const double lean_x = mapping_.forward.inverse(v_des) * (1.0 + a * force_.k_x);
    const double lean_y = -mapping_.yaw.inverse(omega) * (1.0 + a * force_.k_y);

    if (params_.policy == OperatorPolicy::NoisyPurePursuit && params_.noise_std > 0.0 && dt > 0.0) {
        const double decay = std::exp(-dt / params_.noise_time_constant);
        const double kick = params_.noise_std * std::sqrt(1.0 - decay * decay);
        noise_x_ = decay * noise_x_ + kick * gauss_(rng_);
        noise_y_ = decay * noise_y_ + kick * gauss_(rng_);
    }

    OperatorState op;
    op.calibrated = true;
    op.x_h = lean_x + a * hmi.f_x + noise_x_;
    op.y_h = lean_y + a * hmi.f_y + noise_y_;
    return op;
}

}  // namespace telewip
