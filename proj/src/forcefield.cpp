#include "telewip/forcefield.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace telewip {

void ForceParams::validate() const {
    if (!(alpha > 0.0 && beta > 0.0 && p0 > 0.0 && k_x > 0.0 && k_y > 0.0)) {
        throw std::invalid_argument("ForceParams: alpha, beta, p0, k_x, k_y must be > 0");
    }
    if (!(w1 >= 0.0 && w2 >= 0.0 && lambda >= 0.0 && mu >= 0.0)) {
        throw std::invalid_argument("ForceParams: w1, w2, lambda, mu must be >= 0");
    }
}

double g_of(GVariant g, double theta) {
    return g == GVariant::YawAngle ? theta : std::sin(theta);
}

double sigmoid_potential(double p, const ForceParams& params) {
    return params.alpha / (1.0 + std::exp(-params.beta * p));
}

double sigmoid_slope(double p, const ForceParams& params) {
    const double e = std::exp(-params.beta * p);
    const double d = 1.0 + e;
    return params.alpha * params.beta * e / (d * d);
}

double tdsf_force(const ObstacleObservation& obs, const ForceParams& params, double activation) {
    if (obs.p > activation || !(obs.p_dot < 0.0)) return 0.0;
    return params.beta * sigmoid_slope(obs.p, params) * -obs.p_dot;
}

ApfResult apf_force(const ObstacleObservation& obs, double eta, double p0, double ceiling) {
    if (obs.p >= p0) return {};
    if (obs.p <= 0.0) return {ceiling, true};
    const double f = eta * (1.0 / obs.p - 1.0 / p0) / (obs.p * obs.p);
    if (f >= ceiling) return {ceiling, true};
    return {f, false};
}

double total_force(std::span<const ObstacleObservation> observations, GVariant g, const ForceParams& params,
                   double activation) {
    double obstacles = 0.0;
    double walls = 0.0;
    for (const auto& obs : observations) {
        const double f = tdsf_force(obs, params, activation);
        if (f == 0.0) continue;
        const double term = f * g_of(g, obs.theta);
        (obs.kind == ObservationKind::Wall ? walls : obstacles) += term;
    }
    return -(params.w1 * obstacles + params.w2 * walls);
}

std::vector<ProfileRow> force_profile(const ForceParams& params, const ProfileSpec& spec) {
    if (!(spec.step > 0.0) || !(spec.p_max >= 0.0)) throw std::invalid_argument("force_profile: bad grid");
    std::vector<ProfileRow> rows;
    const auto count = static_cast<long>(std::floor(spec.p_max / spec.step + 1e-9));
    rows.reserve(static_cast<std::size_t>(count) + 1);
    for (long i = 0; i <= count; ++i) {
        ObstacleObservation obs;
        obs.p = static_cast<double>(i) * spec.step;
        obs.p_dot = -std::abs(spec.approach_speed);
        ProfileRow row;
        row.p = obs.p;
        row.tdsf = tdsf_force(obs, params, spec.activation);
        const ApfResult apf = apf_force(obs, spec.eta, spec.activation, spec.ceiling);
        // d/dt of the APF potential is its gradient times the approach speed.
        row.td_apf = apf.saturated ? spec.ceiling : std::min(apf.force * std::abs(spec.approach_speed), spec.ceiling);
        row.apf_saturated = apf.saturated || row.td_apf >= spec.ceiling;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace telewip
