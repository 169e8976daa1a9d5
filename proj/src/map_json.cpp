#include "telewip/map_io.hpp"

#include <fstream>
#include <stdexcept>

namespace telewip {

using nlohmann::json;

namespace {

json vec(Vec2 v) { return json::array({v.x, v.y}); }

Vec2 vec_from(const json& j) {
    if (!j.is_array() || j.size() != 2) throw std::runtime_error("map json: expected [x, y]");
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

}  // namespace

json map_to_json(const MapSpec& map) {
    json j;
    j["schema"] = "telewip.map";
    j["version"] = kMapSchemaVersion;
    j["name"] = std::string(to_string(map.name));
    j["seed"] = map.seed;
    j["bounds"] = {{"x_min", map.bounds.x_min},
                   {"x_max", map.bounds.x_max},
                   {"y_min", map.bounds.y_min},
                   {"y_max", map.bounds.y_max}};
    j["walls"] = json::array();
    for (const Wall& w : map.walls) j["walls"].push_back({{"id", w.id}, {"a", vec(w.a)}, {"b", vec(w.b)}});
    j["start"] = {{"x", map.start.x}, {"y", map.start.y}, {"yaw", map.start.yaw}};
    j["goal_x"] = map.goal_x;
    j["midpoints"] = json::array();
    for (const Vec2& m : map.midpoints) j["midpoints"].push_back(vec(m));
    j["brightness"] = map.brightness;
    j["obstacles"] = json::array();
    for (const Obstacle& o : map.obstacles) {
        j["obstacles"].push_back({{"id", o.id},
                                  {"center", vec(o.center)},
                                  {"radius", o.radius},
                                  {"velocity", vec(o.velocity)},
                                  {"kind", o.kind == ObstacleKind::Static ? "static" : "dynamic"}});
    }
    return j;
}

MapSpec map_from_json(const json& j) {
    if (j.value("schema", "") != "telewip.map") throw std::runtime_error("map json: wrong schema tag");
    if (j.value("version", 0) != kMapSchemaVersion) throw std::runtime_error("map json: unsupported version");
    MapSpec m;
    m.name = parse_map_name(j.at("name").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    const json& b = j.at("bounds");
    m.bounds = {b.at("x_min").get<double>(), b.at("x_max").get<double>(), b.at("y_min").get<double>(),
                b.at("y_max").get<double>()};
    for (const json& w : j.at("walls")) m.walls.push_back({w.at("id").get<int>(), vec_from(w.at("a")), vec_from(w.at("b"))});
    const json& s = j.at("start");
    m.start = {s.at("x").get<double>(), s.at("y").get<double>(), s.at("yaw").get<double>()};
    m.goal_x = j.at("goal_x").get<double>();
    for (const json& mp : j.at("midpoints")) m.midpoints.push_back(vec_from(mp));
    m.brightness = j.at("brightness").get<double>();
    for (const json& o : j.at("obstacles")) {
        Obstacle ob;
        ob.id = o.at("id").get<int>();
        ob.center = vec_from(o.at("center"));
        ob.radius = o.at("radius").get<double>();
        ob.velocity = vec_from(o.at("velocity"));
        const std::string kind = o.at("kind").get<std::string>();
        if (kind == "static") {
            ob.kind = ObstacleKind::Static;
        } else if (kind == "dynamic") {
            ob.kind = ObstacleKind::Dynamic;
        } else {
            throw std::runtime_error("map json: unknown obstacle kind '" + kind + "'");
        }
        m.obstacles.push_back(ob);
    }
    return m;
}

void save_map(const MapSpec& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << map_to_json(map).dump(2) << '\n';
}

MapSpec load_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return map_from_json(json::parse(in));
}

}  // namespace telewip
