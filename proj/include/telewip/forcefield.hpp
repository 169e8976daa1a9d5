#pragma once

#include <span>
#include <vector>

namespace telewip {

/// Gains of the repulsive field and of the two feedback channels that
/// consume it.
struct ForceParams {
    double alpha = 1.0;  // force-magnitude gain
    double beta = 2.0;   // slope gain, 1/m
    double p0 = 2.0;     // default activation distance, m
    double w1 = 1.0;     // obstacle weight
    double w2 = 0.5;     // wall weight
    double lambda = 1.0; // operator yaw-command sensitivity
    double mu = 40.0;    // haptic gain
    double k_x = 100.0;  // HMI spring, N/m
    double k_y = 100.0;  // HMI spring, N/m

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
};

enum class ObservationKind { Obstacle, Wall };

/// What the robot knows about one nearby obstacle or wall.
struct ObstacleObservation {
    double p = 0.0;      // surface distance, m, >= 0
    double p_dot = 0.0;  // dp/dt, negative while approaching
    double theta = 0.0;  // body-frame bearing, (-pi, pi]
    ObservationKind kind = ObservationKind::Obstacle;
    int source_id = -1;
};

/// How the bearing enters the aggregate force.
enum class GVariant {
    YawAngle,           // g(theta) = theta
    LateralProjection,  // g(theta) = sin(theta)
};

double g_of(GVariant g, double theta);

/// Logistic potential alpha / (1 + exp(-beta p)).
double sigmoid_potential(double p, const ForceParams& params);

/// d/dp of the logistic potential; peaks at alpha*beta/4 for p = 0.
double sigmoid_slope(double p, const ForceParams& params);

/// Time-derivative sigmoid repulsion magnitude:
/// beta * slope(p) * |p_dot| while approaching within `activation`, else 0.
double tdsf_force(const ObstacleObservation& obs, const ForceParams& params, double activation);

struct ApfResult {
    double force = 0.0;
    bool saturated = false;
};

/// Classic distance-based repulsive gradient eta (1/p - 1/p0) / p^2 within p0.
/// Clamped to `ceiling` (p = 0 included) and flagged as saturated.
ApfResult apf_force(const ObstacleObservation& obs, double eta, double p0, double ceiling);

/// Signed aggregate: -(w1 * sum_obstacles f g(theta) + w2 * sum_walls f g(theta)).
double total_force(std::span<const ObstacleObservation> observations, GVariant g, const ForceParams& params,
                   double activation);

struct ProfileRow {
    double p = 0.0;
    double tdsf = 0.0;
    double td_apf = 0.0;
    bool apf_saturated = false;
};

struct ProfileSpec {
    double p_max = 3.0;
    double step = 0.01;
    double approach_speed = 0.5;  // |dp/dt|, m/s
    double activation = 2.0;      // shared by both fields
    double eta = 1.0;
    double ceiling = 100.0;
};

/// Force-vs-distance magnitudes of TDSF and of the time derivative of the
/// APF potential at a constant approach speed.
std::vector<ProfileRow> force_profile(const ForceParams& params, const ProfileSpec& spec);

}  // namespace telewip
