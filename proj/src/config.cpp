#include "telewip/config.hpp"

#include "telewip/toml_lite.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace telewip {

namespace {

using nlohmann::json;

/// Reads keys out of one config table and rejects the ones nobody asked for.
class Section {
public:
    Section(const json& parent, std::string name) : name_(std::move(name)) {
        if (parent.contains(name_)) {
            node_ = &parent.at(name_);
            if (!node_->is_object()) throw ConfigError("[" + name_ + "] must be a table");
        }
    }
    Section(const json* node, std::string name) : node_(node), name_(std::move(name)) {
        if (node_ && !node_->is_object()) throw ConfigError("[" + name_ + "] must be a table");
    }

    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0 || !node_) return;
        for (const auto& [key, _] : node_->items()) {
            if (!used_.count(key)) throw ConfigError("unknown key '" + key + "' in [" + name_ + "]");
        }
    }

    const json* find(const std::string& key) {
        used_.insert(key);
        if (!node_ || !node_->contains(key)) return nullptr;
        return &node_->at(key);
    }

    void get(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) throw ConfigError(where(key) + " must be a number");
            out = v->get<double>();
        }
    }
    void get(const std::string& key, int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) throw ConfigError(where(key) + " must be an integer");
            out = v->get<int>();
        }
    }
    void get(const std::string& key, unsigned& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer() || v->get<long long>() < 0) throw ConfigError(where(key) + " must be >= 0");
            out = v->get<unsigned>();
        }
    }
    void get(const std::string& key, std::uint64_t& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0))
                throw ConfigError(where(key) + " must be a non-negative integer");
            out = v->get<std::uint64_t>();
        }
    }
    void get(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw ConfigError(where(key) + " must be a boolean");
            out = v->get<bool>();
        }
    }
    void get(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) throw ConfigError(where(key) + " must be a string");
            out = v->get<std::string>();
        }
    }
    template <typename Parse, typename T>
    void get_parsed(const std::string& key, T& out, Parse parse) {
        std::string text;
        get(key, text);
        if (text.empty()) return;
        try {
            out = parse(text);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(where(key) + ": " + e.what());
        }
    }

    const json* node() const { return node_; }
    const std::string& name() const { return name_; }
    std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

private:
    const json* node_ = nullptr;
    std::string name_;
    std::set<std::string> used_;
};

json axis_to_json(const AxisMapping& a) {
    return {{"deadband", a.deadband}, {"slope_low", a.slope_low}, {"slope_high", a.slope_high},
            {"knee", a.knee},         {"max_output", a.max_output}};
}

void read_axis(Section& parent, const std::string& key, AxisMapping& a) {
    Section s(parent.find(key), parent.name() + "." + key);
    s.get("deadband", a.deadband);
    s.get("slope_low", a.slope_low);
    s.get("slope_high", a.slope_high);
    s.get("knee", a.knee);
    s.get("max_output", a.max_output);
}

void read_trial_sections(const json& j, TrialConfig& c) {
    {
        Section s(j, "wip");
        WipParams& w = c.wip;
        s.get("body_mass", w.body_mass);
        s.get("wheel_mass", w.wheel_mass);
        s.get("wheel_radius", w.wheel_radius);
        s.get("com_height", w.com_height);
        s.get("body_pitch_inertia", w.body_pitch_inertia);
        s.get("body_yaw_inertia", w.body_yaw_inertia);
        s.get("wheel_track", w.wheel_track);
        s.get("gravity", w.gravity);
        s.get("torque_limit", w.torque_limit);
    }
    {
        Section s(j, "lqr");
        if (const json* q = s.find("q")) {
            if (!q->is_array() || q->size() != 4) throw ConfigError("[lqr] q must be an array of 4 numbers");
            for (std::size_t i = 0; i < 4; ++i) {
                if (!(*q)[i].is_number()) throw ConfigError("[lqr] q must be an array of 4 numbers");
                c.controller.lqr.q[i] = (*q)[i].get<double>();
            }
        }
        s.get("r", c.controller.lqr.r);
        s.get("max_accel", c.controller.max_accel);
        s.get("position_error_limit", c.controller.position_error_limit);
    }
    {
        Section s(j, "yaw");
        s.get("kp", c.controller.yaw.kp);
        s.get("kd", c.controller.yaw.kd);
    }
    {
        Section s(j, "force");
        ForceParams& f = c.force;
        s.get("alpha", f.alpha);
        s.get("beta", f.beta);
        s.get("p0", f.p0);
        s.get("w1", f.w1);
        s.get("w2", f.w2);
        s.get("lambda", f.lambda);
        s.get("mu", f.mu);
        s.get("k_x", f.k_x);
        s.get("k_y", f.k_y);
    }
    {
        Section s(j, "mapping");
        read_axis(s, "forward", c.mapping.forward);
        read_axis(s, "yaw", c.mapping.yaw);
    }
    {
        Section s(j, "limits");
        s.get("yaw_rate_max", c.limits.yaw_rate_max);
        s.get("hmi_force_limit", c.limits.hmi_force_limit);
        s.get("travel_limit", c.limits.travel_limit);
    }
    {
        Section s(j, "map");
        MapConfig& m = c.map;
        s.get("footprint_radius", m.footprint_radius);
        s.get("midpoint_wall_margin", m.midpoint_wall_margin);
        s.get("column_spacing_min", m.column_spacing_min);
        s.get("column_spacing_max", m.column_spacing_max);
        s.get("row_pitch", m.row_pitch);
        s.get("s2_dynamic_speed_min", m.s2_dynamic_speed_min);
        s.get("s2_dynamic_speed_max", m.s2_dynamic_speed_max);
    }
    {
        Section s(j, "trial");
        s.get("activation_fh", c.activation_fh);
        s.get("robot_radius", c.robot_radius);
        s.get("physics_dt", c.physics_dt);
        s.get("timeout", c.timeout);
        s.get("sample_rate", c.sample_rate);
        s.get("midpoint_radius", c.midpoint_radius);
        s.get("contact_response", c.contact_response);
        s.get("contact_height", c.contact_height);
    }
}

void read_operator(Section& s, OperatorParams& o) {
    s.get_parsed("policy", o.policy, parse_operator_policy);
    s.get("lookahead", o.lookahead);
    s.get("vision_radius", o.vision_radius);
    s.get("reaction_delay", o.reaction_delay);
    s.get("noise_std", o.noise_std);
    s.get("noise_time_constant", o.noise_time_constant);
    s.get("admittance", o.admittance);
    s.get("seed", o.seed);
    s.get("cruise_speed", o.cruise_speed);
    s.get("caution_time", o.caution_time);
    s.get("replan_period", o.replan_period);
    s.get("clearance", o.clearance);
    s.get("grid_resolution", o.grid_resolution);
    s.get("memory", o.memory);
}

template <typename T, typename Parse>
std::vector<T> read_name_list(Section& s, const std::string& key, std::vector<T> fallback, Parse parse) {
    const json* v = s.find(key);
    if (!v) return fallback;
    if (!v->is_array() || v->empty()) throw ConfigError(s.where(key) + " must be a non-empty array of strings");
    std::vector<T> out;
    for (const json& e : *v) {
        if (!e.is_string()) throw ConfigError(s.where(key) + " must be a non-empty array of strings");
        try {
            out.push_back(parse(e.get<std::string>()));
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(s.where(key) + ": " + ex.what());
        }
    }
    return out;
}

template <typename Fn>
void wrap_validation(Fn&& fn) {
    try {
        fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace

void SessionSettings::validate() const {
    if (port < 0 || port > 65535) throw ConfigError("[session] port out of range");
    if (!(physics_rate > 0.0)) throw ConfigError("[session] physics_rate must be > 0");
    if (!(broadcast_rate > 0.0) || broadcast_rate > physics_rate)
        throw ConfigError("[session] broadcast_rate must be in (0, physics_rate]");
    if (!(latency_min_ms >= 0.0) || !(latency_max_ms >= latency_min_ms))
        throw ConfigError("[session] latency needs 0 <= latency_min_ms <= latency_max_ms");
    if (!(stale_after >= 0.0) || !(decay_time > stale_after))
        throw ConfigError("[session] failsafe needs 0 <= stale_after < decay_time");
    if (!(calibration_window > 0.0)) throw ConfigError("[session] calibration_window must be > 0");
    if (!(nearby_radius >= 0.0)) throw ConfigError("[session] nearby_radius must be >= 0");
}

json trial_config_to_json(const TrialConfig& c) {
    const WipParams& w = c.wip;
    const ForceParams& f = c.force;
    const MapConfig& m = c.map;
    json j;
    j["wip"] = {{"body_mass", w.body_mass},
                {"wheel_mass", w.wheel_mass},
                {"wheel_radius", w.wheel_radius},
                {"com_height", w.com_height},
                {"body_pitch_inertia", w.body_pitch_inertia},
                {"body_yaw_inertia", w.body_yaw_inertia},
                {"wheel_track", w.wheel_track},
                {"gravity", w.gravity},
                {"torque_limit", w.torque_limit}};
    j["lqr"] = {{"q", c.controller.lqr.q},
                {"r", c.controller.lqr.r},
                {"max_accel", c.controller.max_accel},
                {"position_error_limit", c.controller.position_error_limit}};
    j["yaw"] = {{"kp", c.controller.yaw.kp}, {"kd", c.controller.yaw.kd}};
    j["force"] = {{"alpha", f.alpha}, {"beta", f.beta},     {"p0", f.p0}, {"w1", f.w1},   {"w2", f.w2},
                  {"lambda", f.lambda}, {"mu", f.mu}, {"k_x", f.k_x}, {"k_y", f.k_y}};
    j["mapping"] = {{"forward", axis_to_json(c.mapping.forward)}, {"yaw", axis_to_json(c.mapping.yaw)}};
    j["limits"] = {{"yaw_rate_max", c.limits.yaw_rate_max},
                   {"hmi_force_limit", c.limits.hmi_force_limit},
                   {"travel_limit", c.limits.travel_limit}};
    j["map"] = {{"footprint_radius", m.footprint_radius},
                {"midpoint_wall_margin", m.midpoint_wall_margin},
                {"column_spacing_min", m.column_spacing_min},
                {"column_spacing_max", m.column_spacing_max},
                {"row_pitch", m.row_pitch},
                {"s2_dynamic_speed_min", m.s2_dynamic_speed_min},
                {"s2_dynamic_speed_max", m.s2_dynamic_speed_max}};
    j["trial"] = {{"activation_fh", c.activation_fh},
                  {"robot_radius", c.robot_radius},
                  {"physics_dt", c.physics_dt},
                  {"timeout", c.timeout},
                  {"sample_rate", c.sample_rate},
                  {"midpoint_radius", c.midpoint_radius},
                  {"contact_response", c.contact_response},
                  {"contact_height", c.contact_height}};
    return j;
}

TrialConfig trial_config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("trial config must be an object");
    static const std::set<std::string> known{"wip", "lqr", "yaw", "force", "mapping", "limits", "map", "trial"};
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown section [" + key + "]");
    }
    TrialConfig c;
    read_trial_sections(j, c);
    wrap_validation([&] { c.validate(); });
    return c;
}

json operator_params_to_json(const OperatorParams& o) {
    return {{"policy", std::string(to_string(o.policy))},
            {"lookahead", o.lookahead},
            {"vision_radius", o.vision_radius},
            {"reaction_delay", o.reaction_delay},
            {"noise_std", o.noise_std},
            {"noise_time_constant", o.noise_time_constant},
            {"admittance", o.admittance},
            {"seed", o.seed},
            {"cruise_speed", o.cruise_speed},
            {"caution_time", o.caution_time},
            {"replan_period", o.replan_period},
            {"clearance", o.clearance},
            {"grid_resolution", o.grid_resolution},
            {"memory", o.memory}};
}

OperatorParams operator_params_from_json(const json& j) {
    OperatorParams o;
    {
        Section s(&j, "operator");
        read_operator(s, o);
    }
    wrap_validation([&] { o.validate(); });
    return o;
}

AppConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a table");
    static const std::set<std::string> known{"wip",   "lqr",      "yaw",  "force", "mapping", "limits",
                                             "map",   "trial",    "operator", "plan", "session"};
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown section [" + key + "]");
    }
    AppConfig c;
    read_trial_sections(j, c.trial);
    {
        Section s(j, "operator");
        read_operator(s, c.op);
    }
    {
        Section s(j, "plan");
        ExperimentPlan& p = c.plan;
        p.maps = read_name_list(s, "maps", p.maps, parse_map_name);
        p.modes = read_name_list(s, "modes", p.modes, parse_feedback_kind);
        s.get("trials_static", p.trials_static);
        s.get("trials_dynamic", p.trials_dynamic);
        s.get("trials", p.trials_override);
        s.get("master_seed", p.master_seed);
        s.get("workers", c.workers);
        s.get("out_dir", c.out_dir);
    }
    {
        Section s(j, "session");
        SessionSettings& ss = c.session;
        s.get("port", ss.port);
        s.get("physics_rate", ss.physics_rate);
        s.get("broadcast_rate", ss.broadcast_rate);
        s.get("latency_min_ms", ss.latency_min_ms);
        s.get("latency_max_ms", ss.latency_max_ms);
        s.get("latency_seed", ss.latency_seed);
        s.get_parsed("map", ss.map, parse_map_name);
        s.get_parsed("mode", ss.mode, parse_feedback_kind);
        s.get("seed", ss.seed);
        s.get("stale_after", ss.stale_after);
        s.get("decay_time", ss.decay_time);
        s.get("calibration_window", ss.calibration_window);
        s.get("nearby_radius", ss.nearby_radius);
    }
    wrap_validation([&] {
        c.trial.validate();
        c.op.validate();
        c.plan.validate();
        c.session.validate();
    });
    return c;
}

json config_to_json(const AppConfig& c) {
    json j = trial_config_to_json(c.trial);
    j["operator"] = operator_params_to_json(c.op);
    json maps = json::array();
    for (MapName m : c.plan.maps) maps.push_back(std::string(to_string(m)));
    json modes = json::array();
    for (FeedbackKind k : c.plan.modes) modes.push_back(std::string(to_string(k)));
    j["plan"] = {{"maps", maps},
                 {"modes", modes},
                 {"trials_static", c.plan.trials_static},
                 {"trials_dynamic", c.plan.trials_dynamic},
                 {"trials", c.plan.trials_override},
                 {"master_seed", c.plan.master_seed},
                 {"workers", c.workers},
                 {"out_dir", c.out_dir}};
    const SessionSettings& s = c.session;
    j["session"] = {{"port", s.port},
                    {"physics_rate", s.physics_rate},
                    {"broadcast_rate", s.broadcast_rate},
                    {"latency_min_ms", s.latency_min_ms},
                    {"latency_max_ms", s.latency_max_ms},
                    {"latency_seed", s.latency_seed},
                    {"map", std::string(to_string(s.map))},
                    {"mode", std::string(to_string(s.mode))},
                    {"seed", s.seed},
                    {"stale_after", s.stale_after},
                    {"decay_time", s.decay_time},
                    {"calibration_window", s.calibration_window},
                    {"nearby_radius", s.nearby_radius}};
    return j;
}

AppConfig parse_config(std::string_view text, bool toml) {
    json j;
    try {
        j = toml ? parse_toml(text) : json::parse(text);
    } catch (const TomlError& e) {
        throw ConfigError(std::string("TOML: ") + e.what());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("JSON: ") + e.what());
    }
    return config_from_json(j);
}

AppConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const bool toml = path.size() >= 5 && path.substr(path.size() - 5) == ".toml";
    try {
        return parse_config(buf.str(), toml);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace telewip
