#include "telewip/sharedcontrol.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace telewip;

namespace {

OperatorState at(double dx, double dy, double x0 = 0.0, double y0 = 0.0) {
    return {x0 + dx, y0 + dy, x0, y0, true};
}

std::vector<ObstacleObservation> random_observations(std::mt19937_64& rng, int count) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ObstacleObservation> out;
    for (int i = 0; i < count; ++i) {
        ObstacleObservation o;
        o.p = 3.0 * u(rng);
        o.p_dot = -2.0 + 3.0 * u(rng);
        o.theta = std::numbers::pi * (2.0 * u(rng) - 1.0);
        o.kind = u(rng) < 0.3 ? ObservationKind::Wall : ObservationKind::Obstacle;
        out.push_back(o);
    }
    return out;
}

}  // namespace

TEST_CASE("dead-band and slopes") {
    const VelocityMapping m;
    CHECK(map_com_to_velocity(at(0.005, 0.0), m).v_d == 0.0);
    CHECK(map_com_to_velocity(at(0.05, 0.0), m).v_d == doctest::Approx(0.16));
    CHECK(map_com_to_velocity(at(0.08, 0.0), m).v_d == doctest::Approx(0.2 + 8.0 * 0.02));
    CHECK(map_com_to_velocity(at(0.15, 0.0), m).v_d == doctest::Approx(0.2 + 8.0 * 0.09));
    CHECK(map_com_to_velocity(at(1.0, 0.0), m).v_d == m.forward.max_output);
    // Neutral offset is honoured.
    CHECK(map_com_to_velocity(at(0.05, 0.0, 0.3, -0.2), m).v_d == doctest::Approx(0.16));
}

TEST_CASE("mapping is odd") {
    const VelocityMapping m;
    for (double d = 0.0; d < 0.3; d += 0.0013) {
        CHECK(m.forward.eval(-d) == -m.forward.eval(d));
        CHECK(m.yaw.eval(-d) == -m.yaw.eval(d));
        const VelocityCommand pos = map_com_to_velocity(at(d, d), m);
        const VelocityCommand neg = map_com_to_velocity(at(-d, -d), m);
        CHECK(pos.v_d == -neg.v_d);
        CHECK(pos.yaw_rate_d == -neg.yaw_rate_d);
    }
}

TEST_CASE("lean to the right turns clockwise") {
    const VelocityMapping m;
    CHECK(map_com_to_velocity(at(0.0, 0.05), m).yaw_rate_d == doctest::Approx(-0.16));
    CHECK(map_com_to_velocity(at(0.0, -0.05), m).yaw_rate_d == doctest::Approx(0.16));
}

TEST_CASE("inverse of the axis mapping") {
    const AxisMapping a;
    for (double v = 0.01; v < a.max_output; v += 0.01) {
        CHECK(a.eval(a.inverse(v)) == doctest::Approx(v).epsilon(1e-12));
        CHECK(a.eval(a.inverse(-v)) == doctest::Approx(-v).epsilon(1e-12));
    }
    CHECK(a.inverse(0.0) == 0.0);
}

TEST_CASE("uncalibrated operator is rejected") {
    OperatorState op;
    op.x_h = 0.1;
    CHECK_THROWS_AS(map_com_to_velocity(op, VelocityMapping{}), CalibrationRequired);
}

TEST_CASE("travel clamp") {
    const OperatorState c = clamp_travel(at(0.4, -0.3, 0.1, 0.2), 0.15);
    CHECK(c.x_h == doctest::Approx(0.25));
    CHECK(c.y_h == doctest::Approx(0.05));
}

TEST_CASE("yaw compensation") {
    ForceParams f;
    CHECK(compensate_yaw(0.4, 0.0, f, 2.0) == 0.4);
    CHECK(compensate_yaw(0.4, -0.21, f, 2.0) == doctest::Approx(0.19));
    f.lambda = 0.5;
    CHECK(compensate_yaw(0.4, 0.0, f, 2.0) == doctest::Approx(0.2));
    CHECK(compensate_yaw(1.9, 5.0, f, 2.0) == 2.0);
    CHECK(compensate_yaw(-1.9, -5.0, f, 2.0) == -2.0);
}

TEST_CASE("hmi force") {
    ForceParams f;
    CHECK(hmi_force(at(0.0, 0.0), 0.0, f, 50.0) == HmiForceCommand{0.0, 0.0});
    CHECK(hmi_force(at(0.0, 0.02), 0.0, f, 50.0).f_y == doctest::Approx(-2.0));
    CHECK(hmi_force(at(0.03, 0.0), 0.0, f, 50.0).f_x == doctest::Approx(-3.0));
    f.mu = 10.0;
    const HmiForceCommand h = hmi_force(at(0.0, 0.0), -0.21, f, 50.0);
    CHECK(h.f_y == doctest::Approx(2.1));
    CHECK(h.f_x == 0.0);
    f.mu = 1000.0;
    CHECK(hmi_force(at(0.0, 0.0), -1.0, f, 50.0).f_y == 50.0);
}

TEST_CASE("spring restores toward neutral") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    const ForceParams f;
    for (int i = 0; i < 2000; ++i) {
        const double dx = u(rng), dy = u(rng);
        const HmiForceCommand h = hmi_force(at(dx, dy, u(rng), u(rng)), 0.0, f, 50.0);
        CHECK(h.f_x * dx + h.f_y * dy <= 0.0);
    }
}

TEST_CASE("combo haptic activation is 1.25 times the controller activation") {
    const FeedbackMode combo(FeedbackKind::Combo, 2.0, 7.0);
    CHECK(combo.activation_fc() == 2.0);
    CHECK(combo.activation_fh() == 2.5);
    CHECK(combo.activation_fh() / combo.activation_fc() == 1.25);
    for (double a : {0.4, 1.0, 1.6, 3.3}) {
        const FeedbackMode m(FeedbackKind::Combo, a, 1.0);
        CHECK(m.activation_fh() == 1.25 * a);
        CHECK(m.max_activation() == m.activation_fh());
    }
    CHECK(FeedbackMode(FeedbackKind::FH, 2.0, 2.0).activation_fh() == 2.0);
    CHECK(FeedbackMode(FeedbackKind::NF, 2.0, 2.0).max_activation() == 0.0);
    CHECK_THROWS(FeedbackMode(FeedbackKind::FC, 0.0, 1.0));
}

TEST_CASE("mode channels") {
    ForceParams f;
    f.mu = 10.0;
    const SharedControlLimits lim;
    ObstacleObservation left;
    left.p = 1.0;
    left.p_dot = -0.5;
    left.theta = std::numbers::pi / 2.0;
    const std::vector<ObstacleObservation> obs{left};
    const VelocityCommand cmd{0.5, 0.4};
    const OperatorState op = at(0.0, 0.0);

    const auto nf = apply_mode(FeedbackMode(FeedbackKind::NF, 3.0, 3.0), cmd, op, obs, f, lim);
    CHECK(nf.yaw_rate_star == doctest::Approx(f.lambda * 0.4));
    CHECK(nf.hmi == HmiForceCommand{0.0, 0.0});

    const auto fh = apply_mode(FeedbackMode(FeedbackKind::FH, 3.0, 3.0), cmd, op, obs, f, lim);
    CHECK(fh.yaw_rate_star == doctest::Approx(0.4));
    CHECK(fh.hmi.f_y == doctest::Approx(2.1).epsilon(1e-3));

    const auto fc = apply_mode(FeedbackMode(FeedbackKind::FC, 3.0, 3.0), cmd, op, obs, f, lim);
    CHECK(fc.yaw_rate_star < 0.4);
    CHECK(fc.hmi == HmiForceCommand{0.0, 0.0});

    const auto combo = apply_mode(FeedbackMode(FeedbackKind::Combo, 3.0, 3.0), cmd, op, obs, f, lim);
    CHECK(combo.yaw_rate_star == fc.yaw_rate_star);
    CHECK(combo.hmi == fh.hmi);
    for (const auto& out : {nf, fh, fc, combo}) CHECK(out.v_d == 0.5);
}

TEST_CASE("mode algebra over random scenes") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ForceParams f;
    const SharedControlLimits lim;
    for (int i = 0; i < 2000; ++i) {
        const auto obs = random_observations(rng, 6);
        const VelocityCommand cmd{1.5 * u(rng), 2.0 * u(rng)};
        const OperatorState op = at(0.15 * u(rng), 0.15 * u(rng));
        const double a = 1.0 + std::abs(u(rng));
        const FeedbackMode combo(FeedbackKind::Combo, a, 1.0);
        const FeedbackMode fc(FeedbackKind::FC, a, 1.0);
        const FeedbackMode fh(FeedbackKind::FH, a, 1.25 * a);
        const auto c = apply_mode(combo, cmd, op, obs, f, lim);
        CHECK(c.yaw_rate_star == apply_mode(fc, cmd, op, obs, f, lim).yaw_rate_star);
        CHECK(c.hmi == apply_mode(fh, cmd, op, obs, f, lim).hmi);
        const auto n = apply_mode(FeedbackMode(FeedbackKind::NF, a, a), cmd, op, obs, f, lim);
        CHECK(n.yaw_rate_star == compensate_yaw(cmd.yaw_rate_d, 0.0, f, lim.yaw_rate_max));
        CHECK(n.hmi == hmi_force(op, 0.0, f, lim.hmi_force_limit));
    }
}

TEST_CASE("forward command is never modified") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const SharedControlLimits lim;
    int checked = 0;
    for (int i = 0; i < 100000; ++i) {
        ForceParams f;
        f.alpha = 0.1 + 10.0 * std::abs(u(rng));
        f.beta = 0.1 + 10.0 * std::abs(u(rng));
        f.mu = 100.0 * std::abs(u(rng));
        f.lambda = 2.0 * std::abs(u(rng));
        const auto obs = random_observations(rng, 1 + i % 8);
        const double v = 1e3 * u(rng);
        const VelocityCommand cmd{v, 5.0 * u(rng)};
        const OperatorState op = at(u(rng), u(rng));
        const auto kind = static_cast<FeedbackKind>(i % 4);
        const auto out = apply_mode(FeedbackMode(kind, 0.5 + 3.0 * std::abs(u(rng)), 2.0), cmd, op, obs, f, lim);
        REQUIRE(out.v_d == v);
        REQUIRE(std::abs(out.yaw_rate_star) <= lim.yaw_rate_max);
        REQUIRE(std::abs(out.hmi.f_x) <= lim.hmi_force_limit);
        REQUIRE(std::abs(out.hmi.f_y) <= lim.hmi_force_limit);
        ++checked;
    }
    CHECK(checked == 100000);
}

TEST_CASE("neutral calibration averages the window") {
    NeutralCalibrator cal(1.0);
    CHECK_FALSE(cal.finished(0.0));
    cal.start(2.0);
    cal.add_sample(1.9, 9.0, 9.0);  // before the window
    for (int k = 0; k < 100; ++k) cal.add_sample(2.0 + 0.01 * k, 0.01 + (k % 2 ? 0.002 : -0.002), -0.03);
    cal.add_sample(3.0, 9.0, 9.0);  // after it
    CHECK_FALSE(cal.finished(2.5));
    CHECK(cal.finished(3.0));
    const OperatorState n = cal.result();
    CHECK(n.calibrated);
    CHECK(n.x_h0 == doctest::Approx(0.01));
    CHECK(n.y_h0 == doctest::Approx(-0.03));
    NeutralCalibrator empty;
    empty.start(0.0);
    CHECK_FALSE(empty.finished(5.0));
    CHECK_THROWS(empty.result());
}

TEST_CASE("feedback kind names") {
    for (auto k : {FeedbackKind::NF, FeedbackKind::FH, FeedbackKind::FC, FeedbackKind::Combo})
        CHECK(parse_feedback_kind(to_string(k)) == k);
    CHECK(parse_feedback_kind("F-H") == FeedbackKind::FH);
    CHECK_THROWS(parse_feedback_kind("haptic"));
}
