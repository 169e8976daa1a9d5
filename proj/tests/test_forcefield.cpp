#include "telewip/forcefield.hpp"

#include "doctest.h"

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace telewip;

namespace {

ObstacleObservation obs(double p, double p_dot, double theta = 0.0, ObservationKind kind = ObservationKind::Obstacle) {
    ObstacleObservation o;
    o.p = p;
    o.p_dot = p_dot;
    o.theta = theta;
    o.kind = kind;
    return o;
}

ForceParams params(double alpha, double beta) {
    ForceParams f;
    f.alpha = alpha;
    f.beta = beta;
    return f;
}

// 30-digit references.
constexpr double kSigmoidAt1 = 0.880797077977882444;
constexpr double kSlopeAt1 = 0.209987170807013035;

}  // namespace

TEST_CASE("sigmoid potential") {
    const ForceParams f = params(1.0, 2.0);
    CHECK(sigmoid_potential(0.0, f) == 0.5);
    CHECK(sigmoid_potential(10.0 / f.beta, f) > 0.999);
    CHECK(sigmoid_potential(10.0 / f.beta, f) < 1.0);
    CHECK(sigmoid_potential(1.0, f) == doctest::Approx(kSigmoidAt1).epsilon(1e-15));
    CHECK(sigmoid_potential(1.0, f) == doctest::Approx(0.8808).epsilon(1e-4));
}

TEST_CASE("sigmoid slope") {
    const ForceParams f = params(1.0, 2.0);
    CHECK(sigmoid_slope(0.0, f) == 0.5);
    CHECK(sigmoid_slope(1.0, f) == doctest::Approx(kSlopeAt1).epsilon(1e-15));
    CHECK(sigmoid_slope(1.0, f) == doctest::Approx(0.2100).epsilon(1e-3));
    const double h = 1e-5;
    const double fd = (sigmoid_potential(1.0 + h, f) - sigmoid_potential(1.0 - h, f)) / (2.0 * h);
    CHECK(std::abs(fd - sigmoid_slope(1.0, f)) < 1e-6);
    double prev = sigmoid_slope(0.0, f);
    for (double p = 0.01; p < 20.0; p += 0.01) {
        const double s = sigmoid_slope(p, f);
        CHECK(s > 0.0);
        CHECK(s < prev);
        prev = s;
    }
}

TEST_CASE("tdsf examples") {
    const ForceParams f = params(1.0, 2.0);
    CHECK(tdsf_force(obs(1.0, 0.0), f, 3.0) == 0.0);
    CHECK(tdsf_force(obs(3.1, -0.5), f, 3.0) == 0.0);
    CHECK(tdsf_force(obs(1.0, 0.3), f, 3.0) == 0.0);
    CHECK(tdsf_force(obs(1.0, -0.5), f, 3.0) == doctest::Approx(2.0 * kSlopeAt1 * 0.5).epsilon(1e-15));
    CHECK(tdsf_force(obs(1.0, -0.5), f, 3.0) == doctest::Approx(0.2100).epsilon(1e-3));
    CHECK(tdsf_force(obs(0.0, -1.0), f, 3.0) == doctest::Approx(f.alpha * f.beta * f.beta / 4.0));
}

TEST_CASE("tdsf along an approach matches the finite difference of the potential") {
    // p(t) = 2.5 - 0.4 t - 0.05 t^2, sampled over the approach.
    const ForceParams f = params(1.3, 1.7);
    auto p_of = [](double t) { return 2.5 - 0.4 * t - 0.05 * t * t; };
    auto pdot_of = [](double t) { return -0.4 - 0.1 * t; };
    for (double t = 0.0; t < 4.0; t += 0.05) {
        const double h = 1e-5;
        const double fd = f.beta * (sigmoid_potential(p_of(t + h), f) - sigmoid_potential(p_of(t - h), f)) / (2.0 * h);
        const double signed_tdsf = -tdsf_force(obs(p_of(t), pdot_of(t)), f, 3.0);
        CHECK(std::abs(fd - signed_tdsf) < 1e-4);
    }
}

TEST_CASE("tdsf contract sweep") {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int points = 0;
    for (int i = 0; i < 10000; ++i) {
        const ForceParams f = params(0.1 + 5.0 * u(rng), 0.2 + 6.0 * u(rng));
        const double activation = 0.2 + 4.0 * u(rng);
        const double p = 5.0 * u(rng);
        const double p_dot = -2.0 + 4.0 * u(rng);
        const ObstacleObservation o = obs(p, p_dot);
        const double force = tdsf_force(o, f, activation);

        REQUIRE(force >= 0.0);
        if (p_dot >= 0.0) REQUIRE(force == 0.0);
        if (p > activation) REQUIRE(force == 0.0);
        const double bound = f.alpha * f.beta * f.beta * std::abs(p_dot) / 4.0;
        REQUIRE(force <= bound);
        if (p > 1e-6 && force > 0.0) REQUIRE(force < bound);

        // Scaling alpha by a power of two scales the force exactly; any
        // other factor to rounding; the support set does not move.
        for (double c : {0.5, 2.0, 8.0, 3.7}) {
            ForceParams g = f;
            g.alpha = c * f.alpha;
            const double scaled = tdsf_force(o, g, activation);
            REQUIRE((scaled > 0.0) == (force > 0.0));
            if (c == 3.7) {
                REQUIRE(std::abs(scaled - c * force) <= 1e-14 * c * force);
            } else {
                REQUIRE(scaled == c * force);
            }
        }

        if (force > 0.0 && p > 1e-3 && activation - p > 1e-3) {
            const double h = 1e-6;
            const double fd = f.beta * (sigmoid_potential(p + p_dot * h, f) - sigmoid_potential(p - p_dot * h, f)) /
                              (2.0 * h);
            REQUIRE(std::abs(fd + force) < 1e-4);
        }
        ++points;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(points == 10000);
    CHECK(seconds < 5.0);
}

TEST_CASE("activation gating on a grid") {
    const ForceParams f = params(1.0, 2.0);
    for (double p = 0.0; p <= 4.0; p += 0.05) {
        const double force = tdsf_force(obs(p, -1.0), f, 2.0);
        if (p > 2.0) {
            CHECK(force == 0.0);
        } else {
            CHECK(force > 0.0);
        }
    }
}

TEST_CASE("apf baseline") {
    CHECK(apf_force(obs(2.0, -1.0), 1.0, 2.0, 100.0).force == 0.0);
    CHECK(apf_force(obs(2.5, -1.0), 1.0, 2.0, 100.0).force == 0.0);
    CHECK(apf_force(obs(1.0, -1.0), 1.0, 2.0, 100.0).force == doctest::Approx(0.5));
    const ApfResult at_zero = apf_force(obs(0.0, -1.0), 1.0, 2.0, 100.0);
    CHECK(at_zero.saturated);
    CHECK(at_zero.force == 100.0);
    const ApfResult close = apf_force(obs(0.01, -1.0), 1.0, 2.0, 100.0);
    CHECK(close.saturated);
    CHECK(close.force == 100.0);
    double prev = 0.0;
    for (double p = 1.99; p > 0.2; p -= 0.01) {
        const double f = apf_force(obs(p, -1.0), 1.0, 2.0, 1e9).force;
        CHECK(f > prev);
        prev = f;
    }
}

TEST_CASE("total force sign and weights") {
    const ForceParams f = params(1.0, 2.0);
    CHECK(total_force({}, GVariant::LateralProjection, f, 2.0) == 0.0);
    const std::vector<ObstacleObservation> ahead{obs(1.0, -0.5, 0.0)};
    CHECK(total_force(ahead, GVariant::LateralProjection, f, 3.0) == 0.0);
    const std::vector<ObstacleObservation> left{obs(1.0, -0.5, std::numbers::pi / 2.0)};
    CHECK(total_force(left, GVariant::LateralProjection, f, 3.0) == doctest::Approx(-0.21).epsilon(1e-3));
    CHECK(total_force(left, GVariant::YawAngle, f, 3.0) ==
          doctest::Approx(-std::numbers::pi / 2.0 * 2.0 * kSlopeAt1 * 0.5));
    const std::vector<ObstacleObservation> wall{obs(1.0, -0.5, std::numbers::pi / 2.0, ObservationKind::Wall)};
    CHECK(total_force(wall, GVariant::LateralProjection, f, 3.0) == doctest::Approx(-0.5 * 2.0 * kSlopeAt1 * 0.5));
    const std::vector<ObstacleObservation> right{obs(1.0, -0.5, -std::numbers::pi / 2.0)};
    CHECK(total_force(right, GVariant::LateralProjection, f, 3.0) > 0.0);
}

TEST_CASE("total force superposition") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const ForceParams f = params(1.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ObstacleObservation> a, b;
        for (int i = 0; i < 5; ++i) {
            const auto kind = i % 2 ? ObservationKind::Wall : ObservationKind::Obstacle;
            a.push_back(obs(1.5 + 1.5 * u(rng), u(rng), std::numbers::pi * u(rng), kind));
            b.push_back(obs(1.5 + 1.5 * u(rng), u(rng), std::numbers::pi * u(rng), kind));
        }
        std::vector<ObstacleObservation> ab = a;
        ab.insert(ab.end(), b.begin(), b.end());
        for (GVariant g : {GVariant::YawAngle, GVariant::LateralProjection}) {
            const double whole = total_force(ab, g, f, 2.0);
            const double parts = total_force(a, g, f, 2.0) + total_force(b, g, f, 2.0);
            CHECK(whole == doctest::Approx(parts).epsilon(1e-12));
        }
    }
}

TEST_CASE("force profile crossover and saturation") {
    ProfileSpec spec;
    spec.p_max = 3.0;
    spec.step = 0.005;
    const ForceParams f = params(1.0, 2.0);
    const auto rows = force_profile(f, spec);
    REQUIRE(rows.size() == 601);
    const double bound = f.alpha * f.beta * f.beta * spec.approach_speed / 4.0;
    double crossover = -1.0;
    for (const ProfileRow& r : rows) {
        CHECK(r.tdsf <= bound);
        if (crossover < 0.0 && r.p > 0.0 && r.td_apf <= r.tdsf) crossover = r.p;
    }
    REQUIRE(crossover > 0.0);
    CHECK(crossover < spec.activation);
    for (const ProfileRow& r : rows) {
        if (r.p < crossover) CHECK(r.td_apf > r.tdsf);
    }
    CHECK(rows.front().apf_saturated);
    CHECK(rows.front().td_apf == spec.ceiling);
    CHECK(rows.front().tdsf == doctest::Approx(bound));
    CHECK_THROWS(force_profile(f, ProfileSpec{3.0, 0.0}));
}

TEST_CASE("force params validation") {
    ForceParams f;
    CHECK_NOTHROW(f.validate());
    f.beta = 0.0;
    CHECK_THROWS(f.validate());
    f = ForceParams{};
    f.mu = -1.0;
    CHECK_THROWS(f.validate());
    f = ForceParams{};
    f.mu = 0.0;
    f.w1 = 0.0;
    CHECK_NOTHROW(f.validate());
}
