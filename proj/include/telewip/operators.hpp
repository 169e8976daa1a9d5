#pragma once

#include "telewip/dynamics.hpp"
#include "telewip/forcefield.hpp"
#include "telewip/sharedcontrol.hpp"
#include "telewip/worlds.hpp"

#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace telewip {

enum class OperatorPolicy { PurePursuit, NoisyPurePursuit };

std::string_view to_string(OperatorPolicy policy);
OperatorPolicy parse_operator_policy(std::string_view text);

/// Scripted stand-in for a human operator.
struct OperatorParams {
    OperatorPolicy policy = OperatorPolicy::NoisyPurePursuit;
    double lookahead = 1.2;        // m
    double vision_radius = 8.0;    // m, at full brightness
    double reaction_delay = 0.25;  // s
    double noise_std = 0.008;      // m, stationary std of the lean noise
    double noise_time_constant = 0.5;  // s, correlation time of the lean noise
    double admittance = 0.004;     // m/N
    std::uint64_t seed = 0;
    double cruise_speed = 0.5;     // m/s
    double caution_time = 2.0;     // s; speed is capped at vision radius / caution_time
    double replan_period = 0.5;    // s
    double clearance = 0.15;       // m kept between footprint and obstacles when planning
    double grid_resolution = 0.1;  // m
    double memory = 1.0;           // s a moving obstacle is remembered after leaving view

    void validate() const;
};

struct PlannerParams {
    double footprint_radius = 0.25;
    double clearance = 0.15;
    double resolution = 0.1;
    double lookahead = 2.0;         // length of the forward-probing fallback
    double midpoint_radius = 0.5;
};

/// Vision radius after the map's brightness scaling.
double effective_vision_radius(const MapSpec& map, double vision_radius);

/// Obstacles the operator can see from `from`: within `vision_radius`
/// (surface distance) and in the forward half-plane. An infinite radius sees
/// everything.
std::vector<Obstacle> visible_obstacles(std::span<const Obstacle> obstacles, const Pose& from, double vision_radius);

/// Grid A* over the corridor using only the obstacles the operator can see,
/// smoothed to line-of-sight waypoints. Targets the next unvisited midpoint,
/// then the goal line. Unknown space is assumed free. When no route exists
/// through the visible obstacles a single forward-probing waypoint is returned.
class GridPlanner {
public:
    GridPlanner(const MapSpec& map, const PlannerParams& params);

    std::vector<Vec2> plan(std::span<const Obstacle> visible, Vec2 from, std::size_t next_midpoint);

    const PlannerParams& params() const { return params_; }

private:
    bool segment_clear(Vec2 a, Vec2 b, std::span<const Obstacle> visible) const;

    const MapSpec* map_;
    PlannerParams params_;
    int nx_ = 0;
    int ny_ = 0;
    std::vector<char> blocked_;
    std::vector<double> cost_;
    std::vector<int> parent_;
    std::vector<char> closed_;
};

std::vector<Vec2> plan_waypoints(const MapSpec& map, std::span<const Obstacle> obstacles, const Pose& from,
                                 std::size_t next_midpoint, double vision_radius, const PlannerParams& params = {});

/// Pure-pursuit operator with reaction delay, haptic admittance and
/// correlated lean noise. Slows for sharp corners, turns along anything it
/// is pressed against and backs off briefly when stalled.
/// Deterministic for a given seed.
class SyntheticOperator {
public:
    SyntheticOperator(const MapSpec& map, const OperatorParams& params, const VelocityMapping& mapping,
                      const ForceParams& force, double footprint_radius);

    /// One control tick. `hmi` is the force the HMI applied on the previous
    /// tick; `obstacles` is the true current obstacle set. Obstacles enter the
    /// operator's memory when seen; static ones stay, moving ones are
    /// forgotten `memory` seconds after leaving view.
    OperatorState tick(const WipState& robot, const HmiForceCommand& hmi, double t,
                       std::span<const Obstacle> obstacles);

    const std::vector<Vec2>& waypoints() const { return waypoints_; }
    std::size_t next_midpoint() const { return next_midpoint_; }

private:
    struct Sample {
        double t;
        WipState state;
    };

    const WipState& perceived(const WipState& robot, double t);
    bool perceive(const WipState& seen, double t, std::span<const Obstacle> obstacles);
    void replan(const WipState& seen);
    Vec2 pursuit_target(Vec2 position) const;

    const MapSpec* map_;
    OperatorParams params_;
    VelocityMapping mapping_;
    ForceParams force_;
    GridPlanner planner_;
    double vision_;
    double cruise_;
    std::deque<Sample> history_;
    std::vector<Vec2> waypoints_;
    std::size_t next_midpoint_ = 0;
    double next_replan_ = 0.0;
    double next_perception_ = 0.0;
    std::vector<Obstacle> known_;
    std::vector<double> seen_at_;  // per obstacle id, -inf when never seen
    std::vector<Obstacle> known_scratch_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> gauss_{0.0, 1.0};
    double noise_x_ = 0.0;
    double noise_y_ = 0.0;
    double last_t_ = 0.0;
    double stalled_since_ = -1.0;
    double backing_until_ = -1.0;
    bool started_ = false;
};

}  // namespace telewip
