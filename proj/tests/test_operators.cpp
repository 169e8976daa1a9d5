#include "telewip/metrics.hpp"
#include "telewip/operators.hpp"
#include "telewip/trial.hpp"

#include "doctest.h"

#include <cmath>
#include <limits>
#include <numeric>

using namespace telewip;

namespace {

OperatorParams clean_params() {
    OperatorParams p;
    p.policy = OperatorPolicy::PurePursuit;
    p.noise_std = 0.0;
    p.admittance = 0.0;
    p.reaction_delay = 0.0;
    return p;
}

bool polyline_clear(const std::vector<Vec2>& pts, Vec2 from, const std::vector<Obstacle>& obstacles, double radius) {
    Vec2 a = from;
    for (const Vec2& b : pts) {
        for (const Obstacle& o : obstacles)
            if (segment_intersects_disc(a, b, o.center, o.radius + radius)) return false;
        a = b;
    }
    return true;
}

}  // namespace

TEST_CASE("empty corridor plans straight to the goal") {
    const MapSpec m = make_empty();
    const auto wp = plan_waypoints(m, m.obstacles, m.start, 0, 8.0);
    REQUIRE(wp.size() == 1);
    CHECK(wp[0].x >= m.goal_x);
    CHECK(wp[0].y == doctest::Approx(m.start.y).epsilon(0.05));
}

TEST_CASE("darkness scales vision") {
    CHECK(effective_vision_radius(make_s2_static(0.1, 1), 8.0) == doctest::Approx(0.8));
    CHECK(effective_vision_radius(make_s2_static(1.0, 1), 8.0) == 8.0);
}

TEST_CASE("visibility is limited to range and the forward half-plane") {
    std::vector<Obstacle> obs(3);
    obs[0].id = 0;
    obs[0].center = {3.0, 0.0};
    obs[1].id = 1;
    obs[1].center = {-3.0, 0.0};
    obs[2].id = 2;
    obs[2].center = {12.0, 0.0};
    const auto seen = visible_obstacles(obs, Pose{0.0, 0.0, 0.0}, 8.0);
    REQUIRE(seen.size() == 1);
    CHECK(seen[0].id == 0);
    CHECK(visible_obstacles(obs, Pose{0.0, 0.0, 0.0}, std::numeric_limits<double>::infinity()).size() == 3);
}

TEST_CASE("full-vision plans on S2 static maps are collision-free") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const MapSpec m = make_s2_static(1.0, seed);
        const auto wp = plan_waypoints(m, m.obstacles, m.start, 0, std::numeric_limits<double>::infinity());
        CAPTURE(seed);
        REQUIRE_FALSE(wp.empty());
        CHECK(wp.back().x >= m.goal_x - 1e-9);
        CHECK(polyline_clear(wp, {m.start.x, m.start.y}, m.obstacles, 0.25));
    }
}

TEST_CASE("plans visit midpoints in order") {
    const MapSpec m = make_s2_dynamic(3);
    std::vector<Obstacle> none;
    const auto wp = plan_waypoints(m, none, m.start, 0, 8.0);
    REQUIRE_FALSE(wp.empty());
    auto near = [&](Vec2 mp) {
        Vec2 a{m.start.x, m.start.y};
        for (std::size_t i = 0; i < wp.size(); ++i) {
            if (point_segment_distance(mp, a, wp[i]) <= 0.5) return static_cast<int>(i);
            a = wp[i];
        }
        return -1;
    };
    const int first = near(m.midpoints[0]);
    const int second = near(m.midpoints[1]);
    CHECK(first >= 0);
    CHECK(second >= first);
}

TEST_CASE("lean sign steers the heading error toward zero") {
    const MapSpec m = make_empty();
    const VelocityMapping mapping;
    for (double yaw : {0.4, -0.4}) {
        SyntheticOperator op(m, clean_params(), mapping, ForceParams{}, 0.25);
        WipState s;
        s.x = m.start.x;
        s.y = m.start.y;
        s.yaw = yaw;
        const OperatorState cmd = op.tick(s, {}, 0.0, m.obstacles);
        const VelocityCommand v = map_com_to_velocity(cmd, mapping);
        CHECK(v.yaw_rate_d * yaw < 0.0);
        CHECK(cmd.y_h * yaw > 0.0);  // lean right to turn clockwise
        CHECK(v.v_d > 0.0);
    }
}

TEST_CASE("admittance adds the haptic push to the lean") {
    const MapSpec m = make_empty();
    OperatorParams p = clean_params();
    p.admittance = 0.005;
    SyntheticOperator a(m, p, VelocityMapping{}, ForceParams{}, 0.25);
    SyntheticOperator b(m, p, VelocityMapping{}, ForceParams{}, 0.25);
    WipState s;
    s.x = m.start.x;
    const OperatorState pushed = a.tick(s, {0.0, 2.1}, 0.0, m.obstacles);
    const OperatorState free = b.tick(s, {0.0, 0.0}, 0.0, m.obstacles);
    CHECK(pushed.y_h - free.y_h == doctest::Approx(0.0105).epsilon(1e-12));
    CHECK(pushed.x_h == free.x_h);
}

TEST_CASE("same seed gives a bit-identical command tape") {
    TrialConfig cfg;
    cfg.timeout = 20.0;
    OperatorParams p;
    p.seed = 99;
    const MapSpec m = make_s2_static(1.0, 7);
    CommandTape t1, t2, t3;
    run_trial(m, FeedbackKind::Combo, p, cfg, &t1);
    run_trial(m, FeedbackKind::Combo, p, cfg, &t2);
    p.seed = 100;
    run_trial(m, FeedbackKind::Combo, p, cfg, &t3);
    CHECK(t1 == t2);
    CHECK_FALSE(t1 == t3);
    CHECK(t1.entries.size() > 1000);
}

TEST_CASE("operator params validation") {
    OperatorParams p;
    CHECK_NOTHROW(p.validate());
    p.lookahead = 0.0;
    CHECK_THROWS(p.validate());
    p = OperatorParams{};
    p.reaction_delay = -0.1;
    CHECK_THROWS(p.validate());
    p = OperatorParams{};
    p.admittance = -1.0;
    CHECK_THROWS(p.validate());
    CHECK(parse_operator_policy(to_string(OperatorPolicy::PurePursuit)) == OperatorPolicy::PurePursuit);
}

TEST_CASE("haptic responsiveness") {
    // Lean versus the obstacle part of the HMI y force over an F-H trial.
    // The spring part of f_y opposes the lean by construction, so it is
    // taken out before correlating.
    TrialConfig cfg;
    cfg.timeout = 60.0;
    OperatorParams p;
    p.seed = 5;
    const MapSpec m = make_s2_static(1.0, 12);
    TrialSimulation sim(m, cfg.feedback_mode(FeedbackKind::FH), cfg);
    SyntheticOperator driver(sim.map(), p, cfg.mapping, cfg.force, cfg.robot_radius);
    std::vector<double> y, f;
    double haptic = 0.0;
    while (!sim.finished()) {
        const OperatorState cmd = driver.tick(sim.robot(), sim.last_hmi(), sim.time(), sim.obstacles());
        y.push_back(cmd.y_h - cmd.y_h0);
        f.push_back(haptic);
        sim.step(cmd);
        haptic = sim.last_hmi().f_y + cfg.force.k_y * (cmd.y_h - cmd.y_h0);
    }
    REQUIRE(p.admittance > 0.0);
    auto corr = [&](std::size_t lag) {
        const std::size_t n = y.size() - lag;
        double my = 0, mf = 0;
        for (std::size_t i = 0; i < n; ++i) my += y[i + lag], mf += f[i];
        my /= n;
        mf /= n;
        double sxy = 0, sxx = 0, syy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sxy += (y[i + lag] - my) * (f[i] - mf);
            sxx += (f[i] - mf) * (f[i] - mf);
            syy += (y[i + lag] - my) * (y[i + lag] - my);
        }
        return sxy / std::sqrt(sxx * syy);
    };
    double best = -1.0;
    const auto max_lag = static_cast<std::size_t>(p.reaction_delay / cfg.physics_dt);
    for (std::size_t lag = 0; lag <= max_lag; lag += 10) best = std::max(best, corr(lag));
    MESSAGE("best lean/haptic correlation " << best);
    CHECK(best > 0.1);
}

TEST_CASE("more lean noise never lowers the collision number") {
    // 100 paired seeds per noise level on the bright static map without feedback.
    TrialConfig cfg;
    std::vector<double> means;
    for (double noise : {0.0, 0.005, 0.010, 0.015}) {
        std::vector<TrialRecord> recs;
        for (int i = 0; i < 100; ++i) {
            OperatorParams p;
            p.noise_std = noise;
            p.seed = 1000 + static_cast<std::uint64_t>(i);
            recs.push_back(run_trial(make_s2_static(1.0, 500 + static_cast<std::uint64_t>(i)), FeedbackKind::NF, p, cfg));
            recs.back().trajectory.clear();
        }
        means.push_back(metric_collision_number(recs));
        MESSAGE("noise " << noise << " m: C-N " << means.back());
    }
    for (std::size_t i = 1; i < means.size(); ++i) CHECK(means[i] >= means[i - 1]);
}
