#include "telewip/worlds.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace telewip {

namespace {

std::vector<Wall> boundary_walls(const Bounds& b) {
    return {
        {0, {b.x_min, b.y_min}, {b.x_max, b.y_min}},
        {1, {b.x_min, b.y_max}, {b.x_max, b.y_max}},
        {2, {b.x_min, b.y_min}, {b.x_min, b.y_max}},
        {3, {b.x_max, b.y_min}, {b.x_max, b.y_max}},
    };
}

MapSpec corridor(MapName name, double length, double width) {
    MapSpec m;
    m.name = name;
    m.bounds = {0.0, length, -0.5 * width, 0.5 * width};
    m.walls = boundary_walls(m.bounds);
    m.start = {1.0, 0.0, 0.0};
    m.goal_x = length - 1.0;
    return m;
}

void add_static(MapSpec& m, double x, double y) {
    Obstacle o;
    o.id = static_cast<int>(m.obstacles.size());
    o.center = {x, y};
    m.obstacles.push_back(o);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
    std::mt19937_64 g(seq);
    return g();
}

}  // namespace

std::string_view to_string(MapName name) {
    switch (name) {
        case MapName::S1Static: return "S1Static";
        case MapName::S1Dynamic: return "S1Dynamic";
        case MapName::S2StaticBright: return "S2StaticBright";
        case MapName::S2StaticDark: return "S2StaticDark";
        case MapName::S2Dynamic: return "S2Dynamic";
        case MapName::Empty: return "Empty";
    }
    return "Empty";
}

MapName parse_map_name(std::string_view text) {
    std::string t(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "s1static" || t == "s1") return MapName::S1Static;
    if (t == "s1dynamic" || t == "s1dyn") return MapName::S1Dynamic;
    if (t == "s2staticbright" || t == "s2bright" || t == "s2static") return MapName::S2StaticBright;
    if (t == "s2staticdark" || t == "s2dark") return MapName::S2StaticDark;
    if (t == "s2dynamic" || t == "s2dyn") return MapName::S2Dynamic;
    if (t == "empty") return MapName::Empty;
    throw std::invalid_argument("unknown map '" + std::string(text) + "'");
}

MapSpec make_empty(double length, double width) {
    return corridor(MapName::Empty, length, width);
}

MapSpec make_s1_static() {
    MapSpec m = corridor(MapName::S1Static, 30.0, 6.0);
    // Four slalom gates. Each is a fence from one wall to just past the
    // centerline, alternating sides, so the route weaves in an S.
    const double gate_x[] = {6.0, 10.0, 14.0, 18.0};
    const double fence[] = {0.1, -0.7, -1.5, -2.3, -2.75};
    double side = 1.0;
    for (double x : gate_x) {
        for (double y : fence) add_static(m, x, side * y);
        side = -side;
    }
    // Loose posts after the slalom.
    add_static(m, 22.0, 1.0);
    add_static(m, 23.5, -0.8);
    add_static(m, 25.0, 0.6);
    add_static(m, 26.5, -1.2);
    return m;
}

MapSpec make_s1_dynamic() {
    MapSpec m = corridor(MapName::S1Dynamic, 30.0, 6.0);
    // Pedestrians crossing the corridor with fixed starts and speeds.
    struct Walker {
        double x, y, speed, heading_deg;
    };
    const Walker walkers[] = {
        {5.0, 2.0, 0.60, -90.0},  {8.0, -2.2, 0.75, 90.0},  {11.0, 0.5, 0.90, -90.0},
        {13.5, -1.0, 0.65, 90.0}, {16.0, 2.4, 0.80, -100.0}, {18.5, -2.4, 0.70, 80.0},
        {21.0, 1.0, 0.85, -90.0}, {23.5, -0.5, 0.60, 95.0},  {26.0, 2.0, 0.75, -85.0},
    };
    for (const Walker& w : walkers) {
        Obstacle o;
        o.id = static_cast<int>(m.obstacles.size());
        o.center = {w.x, w.y};
        const double h = w.heading_deg * std::numbers::pi / 180.0;
        o.velocity = {w.speed * std::cos(h), w.speed * std::sin(h)};
        o.kind = ObstacleKind::Dynamic;
        m.obstacles.push_back(o);
    }
    return m;
}

MapSpec make_s2_static(double brightness, std::uint64_t seed, const MapConfig& config) {
    if (!(brightness > 0.0 && brightness <= 1.0)) throw std::invalid_argument("brightness must be in (0, 1]");
    for (std::uint64_t attempt = 0;; ++attempt) {
        MapSpec m = corridor(brightness < 1.0 ? MapName::S2StaticDark : MapName::S2StaticBright, 20.0, 8.0);
        m.brightness = brightness;
        m.seed = seed;
        std::mt19937_64 rng(attempt == 0 ? seed : mix_seed(seed, attempt));
        std::uniform_real_distribution<double> spacing(config.column_spacing_min, config.column_spacing_max);

        const double width = m.bounds.y_max - m.bounds.y_min;
        const int rows = static_cast<int>(std::floor(width / config.row_pitch + 1e-9));
        std::uniform_int_distribution<int> removed_row(0, rows - 1);
        double x = m.start.x + spacing(rng);
        while (x <= m.goal_x - 2.0) {
            const int gap = removed_row(rng);
            for (int r = 0; r < rows; ++r) {
                if (r == gap) continue;
                add_static(m, x, m.bounds.y_min + config.row_pitch * (r + 0.5));
            }
            x += spacing(rng);
        }
        if (grid_feasible(m, config.footprint_radius)) return m;
        if (attempt > 64) throw std::runtime_error("make_s2_static: no feasible layout found");
    }
}

MapSpec make_s2_dynamic(std::uint64_t seed, const MapConfig& config) {
    MapSpec m = corridor(MapName::S2Dynamic, 20.0, 10.0);
    m.seed = seed;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Two required midpoints hugging the top or bottom wall.
    const double mid_x[2] = {5.0 + 4.0 * unit(rng), 11.0 + 4.0 * unit(rng)};
    for (double mx : mid_x) {
        const bool top = unit(rng) < 0.5;
        const double inset = 0.5 * config.midpoint_wall_margin + 0.5 * config.midpoint_wall_margin * unit(rng);
        m.midpoints.push_back({mx, top ? m.bounds.y_max - inset : m.bounds.y_min + inset});
    }

    const double r = kPersonRadius;
    const double x_lo = 3.0, x_hi = m.bounds.x_max - 1.5;
    const double y_lo = m.bounds.y_min + r + 0.05, y_hi = m.bounds.y_max - r - 0.05;
    while (m.obstacles.size() < 60) {
        const Vec2 c{x_lo + (x_hi - x_lo) * unit(rng), y_lo + (y_hi - y_lo) * unit(rng)};
        const double heading = 2.0 * std::numbers::pi * unit(rng);
        const double speed =
            config.s2_dynamic_speed_min + (config.s2_dynamic_speed_max - config.s2_dynamic_speed_min) * unit(rng);
        bool ok = norm(c - Vec2{m.start.x, m.start.y}) > 2.0;
        for (const Vec2& mp : m.midpoints) ok = ok && norm(c - mp) > 1.0;
        for (const Obstacle& o : m.obstacles) ok = ok && norm(c - o.center) > 2.0 * r + 0.1;
        if (!ok) continue;
        Obstacle o;
        o.id = static_cast<int>(m.obstacles.size());
        o.center = c;
        o.velocity = {speed * std::cos(heading), speed * std::sin(heading)};
        o.kind = ObstacleKind::Dynamic;
        m.obstacles.push_back(o);
    }
    return m;
}

MapSpec make_map(MapName name, std::uint64_t seed, const MapConfig& config) {
    switch (name) {
        case MapName::S1Static: return make_s1_static();
        case MapName::S1Dynamic: return make_s1_dynamic();
        case MapName::S2StaticBright: return make_s2_static(1.0, seed, config);
        case MapName::S2StaticDark: return make_s2_static(0.1, seed, config);
        case MapName::S2Dynamic: return make_s2_dynamic(seed, config);
        case MapName::Empty: return make_empty();
    }
    throw std::invalid_argument("make_map: unknown map");
}

void step_obstacles(std::vector<Obstacle>& obstacles, const Bounds& bounds, double dt) {
    for (Obstacle& o : obstacles) {
        if (o.kind == ObstacleKind::Static) continue;
        o.center += dt * o.velocity;
        const double x_lo = bounds.x_min + o.radius, x_hi = bounds.x_max - o.radius;
        const double y_lo = bounds.y_min + o.radius, y_hi = bounds.y_max - o.radius;
        if (o.center.x < x_lo) {
            o.center.x = 2.0 * x_lo - o.center.x;
            o.velocity.x = std::abs(o.velocity.x);
        } else if (o.center.x > x_hi) {
            o.center.x = 2.0 * x_hi - o.center.x;
            o.velocity.x = -std::abs(o.velocity.x);
        }
        if (o.center.y < y_lo) {
            o.center.y = 2.0 * y_lo - o.center.y;
            o.velocity.y = std::abs(o.velocity.y);
        } else if (o.center.y > y_hi) {
            o.center.y = 2.0 * y_hi - o.center.y;
            o.velocity.y = -std::abs(o.velocity.y);
        }
    }
}

void observe(const WipState& robot, double robot_radius, std::span<const Obstacle> obstacles,
             std::span<const Wall> walls, double activation, std::vector<ObstacleObservation>& out) {
    out.clear();
    const Vec2 c{robot.x, robot.y};
    const Vec2 heading{std::cos(robot.yaw), std::sin(robot.yaw)};
    const Vec2 vel = robot.v * heading;

    auto push = [&](Vec2 delta, double p, Vec2 rel_velocity, ObservationKind kind, int id) {
        const double dist = norm(delta);
        const Vec2 u = dist > 0.0 ? (1.0 / dist) * delta : heading;
        const Vec2 body = rotate_into(u, robot.yaw);
        ObstacleObservation obs;
        obs.p = std::max(0.0, p);
        obs.p_dot = dot(rel_velocity, u);
        obs.theta = std::atan2(body.y, body.x);
        obs.kind = kind;
        obs.source_id = id;
        out.push_back(obs);
    };

    for (const Obstacle& o : obstacles) {
        const Vec2 d = o.center - c;
        const double reach = activation + robot_radius + o.radius;
        if (norm_sq(d) > reach * reach) continue;
        const double p = norm(d) - robot_radius - o.radius;
        if (std::max(0.0, p) > activation) continue;
        push(d, p, o.velocity - vel, ObservationKind::Obstacle, o.id);
    }
    for (const Wall& w : walls) {
        const Vec2 q = closest_point_on_segment(c, w.a, w.b);
        const Vec2 d = q - c;
        const double p = norm(d) - robot_radius;
        if (std::max(0.0, p) > activation) continue;
        push(d, p, Vec2{} - vel, ObservationKind::Wall, w.id);
    }
}

std::vector<ObstacleObservation> observe(const WipState& robot, double robot_radius,
                                         std::span<const Obstacle> obstacles, std::span<const Wall> walls,
                                         double activation) {
    std::vector<ObstacleObservation> out;
    observe(robot, robot_radius, obstacles, walls, activation, out);
    return out;
}

std::vector<Contact> find_contacts(const WipState& robot, double robot_radius, std::span<const Obstacle> obstacles,
                                   std::span<const Wall> walls) {
    std::vector<Contact> contacts;
    const Vec2 c{robot.x, robot.y};
    for (const Obstacle& o : obstacles) {
        const Vec2 d = o.center - c;
        const double reach = robot_radius + o.radius;
        const double dsq = norm_sq(d);
        if (dsq >= reach * reach) continue;
        const double dist = std::sqrt(dsq);
        const Vec2 n = dist > 0.0 ? (1.0 / dist) * d : Vec2{std::cos(robot.yaw), std::sin(robot.yaw)};
        contacts.push_back({CollisionTarget::Obstacle, o.id, reach - dist, n});
    }
    for (const Wall& w : walls) {
        const Vec2 d = closest_point_on_segment(c, w.a, w.b) - c;
        const double dist = norm(d);
        if (dist >= robot_radius) continue;
        const Vec2 n = dist > 0.0 ? (1.0 / dist) * d : Vec2{std::cos(robot.yaw), std::sin(robot.yaw)};
        contacts.push_back({CollisionTarget::Wall, w.id, robot_radius - dist, n});
    }
    return contacts;
}

std::vector<CollisionEvent> CollisionMonitor::check(const WipState& robot, double robot_radius,
                                                    std::span<const Obstacle> obstacles, std::span<const Wall> walls,
                                                    double time) {
    std::vector<CollisionEvent> events;
    const Vec2 c{robot.x, robot.y};
    auto latch_slot = [](std::vector<char>& v, int id) -> char& {
        if (id < 0) throw std::out_of_range("negative collision target id");
        if (static_cast<std::size_t>(id) >= v.size()) v.resize(static_cast<std::size_t>(id) + 1, 0);
        return v[static_cast<std::size_t>(id)];
    };
    for (const Obstacle& o : obstacles) {
        const double dist = norm(o.center - c);
        const double reach = robot_radius + o.radius;
        char& latched = latch_slot(obstacle_latched_, o.id);
        if (dist < reach) {
            if (!latched) events.push_back({time, CollisionTarget::Obstacle, o.id, reach - dist});
            latched = 1;
        } else if (dist > reach + margin_) {
            latched = 0;
        }
    }
    for (const Wall& w : walls) {
        const double dist = point_segment_distance(c, w.a, w.b);
        char& latched = latch_slot(wall_latched_, w.id);
        if (dist < robot_radius) {
            if (!latched) events.push_back({time, CollisionTarget::Wall, w.id, robot_radius - dist});
            latched = 1;
        } else if (dist > robot_radius + margin_) {
            latched = 0;
        }
    }
    return events;
}

bool CollisionMonitor::in_contact() const {
    return std::find(obstacle_latched_.begin(), obstacle_latched_.end(), 1) != obstacle_latched_.end() ||
           std::find(wall_latched_.begin(), wall_latched_.end(), 1) != wall_latched_.end();
}

bool grid_feasible(const MapSpec& map, double footprint_radius, double resolution, double midpoint_radius) {
    const Bounds& b = map.bounds;
    const int nx = static_cast<int>(std::ceil((b.x_max - b.x_min) / resolution));
    const int ny = static_cast<int>(std::ceil((b.y_max - b.y_min) / resolution));
    auto cx = [&](int i) { return b.x_min + (i + 0.5) * resolution; };
    auto cy = [&](int j) { return b.y_min + (j + 0.5) * resolution; };
    auto index = [&](int i, int j) { return static_cast<std::size_t>(j) * nx + i; };

    std::vector<char> free(static_cast<std::size_t>(nx) * ny, 0);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Vec2 p{cx(i), cy(j)};
            bool ok = true;
            for (const Wall& w : map.walls) ok = ok && point_segment_distance(p, w.a, w.b) >= footprint_radius;
            free[index(i, j)] = ok;
        }
    }
    for (const Obstacle& o : map.obstacles) {
        const double reach = o.radius + footprint_radius;
        const int i0 = std::max(0, static_cast<int>(std::floor((o.center.x - reach - b.x_min) / resolution)));
        const int i1 = std::min(nx - 1, static_cast<int>(std::ceil((o.center.x + reach - b.x_min) / resolution)));
        const int j0 = std::max(0, static_cast<int>(std::floor((o.center.y - reach - b.y_min) / resolution)));
        const int j1 = std::min(ny - 1, static_cast<int>(std::ceil((o.center.y + reach - b.y_min) / resolution)));
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                if (norm(Vec2{cx(i), cy(j)} - o.center) < reach) free[index(i, j)] = 0;
    }

    auto cell_of = [&](Vec2 p) {
        const int i = std::clamp(static_cast<int>((p.x - b.x_min) / resolution), 0, nx - 1);
        const int j = std::clamp(static_cast<int>((p.y - b.y_min) / resolution), 0, ny - 1);
        return std::pair{i, j};
    };

    // BFS from a set of seed cells until `reached` holds for some cell.
    auto search = [&](std::vector<std::pair<int, int>> seeds, auto reached) {
        std::vector<char> seen(free.size(), 0);
        std::deque<std::pair<int, int>> queue;
        for (auto s : seeds) {
            if (!free[index(s.first, s.second)] || seen[index(s.first, s.second)]) continue;
            seen[index(s.first, s.second)] = 1;
            queue.push_back(s);
        }
        std::vector<std::pair<int, int>> hits;
        while (!queue.empty()) {
            const auto [i, j] = queue.front();
            queue.pop_front();
            if (reached(i, j)) hits.emplace_back(i, j);
            const int di[] = {1, -1, 0, 0};
            const int dj[] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                const int ni = i + di[k], nj = j + dj[k];
                if (ni < 0 || nj < 0 || ni >= nx || nj >= ny) continue;
                const std::size_t id = index(ni, nj);
                if (!free[id] || seen[id]) continue;
                seen[id] = 1;
                queue.emplace_back(ni, nj);
            }
        }
        return hits;
    };

    std::vector<std::pair<int, int>> frontier{cell_of({map.start.x, map.start.y})};
    for (const Vec2& mp : map.midpoints) {
        frontier = search(frontier, [&](int i, int j) { return norm(Vec2{cx(i), cy(j)} - mp) <= midpoint_radius; });
        if (frontier.empty()) return false;
    }
    return !search(frontier, [&](int i, int) { return cx(i) >= map.goal_x; }).empty();
}

}  // namespace telewip
