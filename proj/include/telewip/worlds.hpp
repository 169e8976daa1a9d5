#pragma once

#include "telewip/dynamics.hpp"
#include "telewip/forcefield.hpp"
#include "telewip/geometry.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace telewip {

/// Obstacles are cylinders sized after a 5'7" person with a 7.9" radius.
inline constexpr double kPersonRadius = 7.9 * 0.0254;
inline constexpr double kPersonHeight = 67.0 * 0.0254;

enum class ObstacleKind { Static, Dynamic };

struct Obstacle {
    int id = 0;
    Vec2 center;
    double radius = kPersonRadius;
    Vec2 velocity;
    ObstacleKind kind = ObstacleKind::Static;

    friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

struct Wall {
    int id = 0;
    Vec2 a;
    Vec2 b;

    friend bool operator==(const Wall&, const Wall&) = default;
};

struct Bounds {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;

    bool contains(Vec2 p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
    friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;

    friend bool operator==(const Pose&, const Pose&) = default;
};

enum class MapName { S1Static, S1Dynamic, S2StaticBright, S2StaticDark, S2Dynamic, Empty };

std::string_view to_string(MapName name);
/// Accepts canonical names ("S2StaticBright") and short CLI aliases ("s2bright").
MapName parse_map_name(std::string_view text);

struct MapSpec {
    MapName name = MapName::Empty;
    Bounds bounds;
    std::vector<Wall> walls;
    Pose start;
    double goal_x = 0.0;
    std::vector<Vec2> midpoints;
    double brightness = 1.0;
    std::uint64_t seed = 0;
    std::vector<Obstacle> obstacles;

    friend bool operator==(const MapSpec&, const MapSpec&) = default;
};

/// Generation knobs shared by the map builders.
struct MapConfig {
    double footprint_radius = 0.25;
    double midpoint_wall_margin = 1.0;
    double column_spacing_min = 2.5;
    double column_spacing_max = 4.0;
    double row_pitch = 0.8;
    double s2_dynamic_speed_min = 0.2;
    double s2_dynamic_speed_max = 0.6;
};

/// Open rectangular corridor with no obstacles; used for calibration runs.
MapSpec make_empty(double length = 30.0, double width = 6.0);
MapSpec make_s1_static();
MapSpec make_s1_dynamic();
MapSpec make_s2_static(double brightness, std::uint64_t seed, const MapConfig& config = {});
MapSpec make_s2_dynamic(std::uint64_t seed, const MapConfig& config = {});
MapSpec make_map(MapName name, std::uint64_t seed, const MapConfig& config = {});

/// Advance dynamic obstacles at constant velocity with specular reflection on
/// the map bounds.
void step_obstacles(std::vector<Obstacle>& obstacles, const Bounds& bounds, double dt);

/// All obstacles and walls whose surface distance is within `activation`.
/// `out` is cleared first so callers can reuse its storage.
void observe(const WipState& robot, double robot_radius, std::span<const Obstacle> obstacles,
             std::span<const Wall> walls, double activation, std::vector<ObstacleObservation>& out);

std::vector<ObstacleObservation> observe(const WipState& robot, double robot_radius,
                                         std::span<const Obstacle> obstacles, std::span<const Wall> walls,
                                         double activation);

enum class CollisionTarget { Obstacle, Wall };

struct Contact {
    CollisionTarget target = CollisionTarget::Obstacle;
    int id = 0;
    double penetration = 0.0;
    Vec2 normal;  // unit vector from the robot toward the contact
};

struct CollisionEvent {
    double time = 0.0;
    CollisionTarget target = CollisionTarget::Obstacle;
    int id = 0;
    double penetration = 0.0;

    friend bool operator==(const CollisionEvent&, const CollisionEvent&) = default;
};

/// Every current overlap between the robot disc and obstacles or walls.
std::vector<Contact> find_contacts(const WipState& robot, double robot_radius, std::span<const Obstacle> obstacles,
                                   std::span<const Wall> walls);

/// Debounced collision detection: an overlap reports one event at onset and
/// re-arms only after the robot separates by more than `separation_margin`.
class CollisionMonitor {
public:
    explicit CollisionMonitor(double separation_margin = 0.02) : margin_(separation_margin) {}

    std::vector<CollisionEvent> check(const WipState& robot, double robot_radius, std::span<const Obstacle> obstacles,
                                      std::span<const Wall> walls, double time);

    bool in_contact() const;

private:
    double margin_;
    std::vector<char> obstacle_latched_;
    std::vector<char> wall_latched_;
};

/// Coarse occupancy-grid BFS: can a disc of `footprint_radius` travel from the
/// start through every midpoint (in order) to the goal line?
bool grid_feasible(const MapSpec& map, double footprint_radius, double resolution = 0.05,
                   double midpoint_radius = 0.5);

}  // namespace telewip
