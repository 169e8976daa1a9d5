#include "telewip/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace telewip {

namespace {

struct MassTerms {
    double a;  // effective translational mass, wheels included
    double b;  // body mass times pendulum length
    double c;  // body pitch inertia about the axle
    double mgl;
};

MassTerms mass_terms(const WipParams& p) {
    const double l = p.pendulum_length();
    const double wheel_inertia = 0.5 * p.wheel_mass * p.wheel_radius * p.wheel_radius;
    MassTerms m{};
    m.a = p.body_mass + 2.0 * p.wheel_mass + 2.0 * wheel_inertia / (p.wheel_radius * p.wheel_radius);
    m.b = p.body_mass * l;
    m.c = p.body_pitch_inertia + p.body_mass * l * l;
    m.mgl = p.body_mass * p.gravity * l;
    return m;
}

double yaw_inertia(const WipParams& p) {
    const double wheel_inertia = 0.5 * p.wheel_mass * p.wheel_radius * p.wheel_radius;
    const double half_track = 0.5 * p.wheel_track;
    return p.body_yaw_inertia +
           2.0 * (p.wheel_mass + wheel_inertia / (p.wheel_radius * p.wheel_radius)) * half_track * half_track;
}

}  // namespace

void WipParams::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ModelError(std::string("invalid WipParams: ") + what);
    };
    require(body_mass > 0.0, "body_mass must be > 0");
    require(wheel_mass > 0.0, "wheel_mass must be > 0");
    require(wheel_radius > 0.0, "wheel_radius must be > 0");
    require(com_height > 0.0, "com_height must be > 0");
    require(body_pitch_inertia > 0.0, "body_pitch_inertia must be > 0");
    require(body_yaw_inertia > 0.0, "body_yaw_inertia must be > 0");
    require(wheel_track > 0.0, "wheel_track must be > 0");
    require(gravity >= 0.0, "gravity must be >= 0");
    require(torque_limit > 0.0, "torque_limit must be > 0");
    require(wheel_radius < com_height, "wheel_radius must be below com_height");
}

double normalize_angle(double angle) {
    constexpr double pi = std::numbers::pi;
    if (angle > -pi && angle <= pi) return angle;
    double a = std::fmod(angle + pi, 2.0 * pi);
    if (a <= 0.0) a += 2.0 * pi;
    return a - pi;
}

LinearModel linearize_wip(const WipParams& params) {
    params.validate();
    const MassTerms m = mass_terms(params);
    const double det = m.a * m.c - m.b * m.b;
    if (!(det > 0.0) || !std::isfinite(det)) throw ModelError("singular WIP mass matrix");
    const double r = params.wheel_radius;

    LinearModel lin;
    lin.A.setZero();
    lin.B.setZero();
    lin.A(0, 1) = 1.0;
    lin.A(1, 0) = m.a * m.mgl / det;
    lin.A(2, 3) = 1.0;
    lin.A(3, 0) = -m.b * m.mgl / det;
    lin.B(1) = -(m.a + m.b / r) / det;
    lin.B(3) = (m.c / r + m.b) / det;
    if (!lin.A.allFinite() || !lin.B.allFinite()) throw ModelError("non-finite linearization");
    return lin;
}

Accelerations wip_accelerations(const WipState& s, const WheelTorques& torques, const WipParams& params) {
    const MassTerms m = mass_terms(params);
    const double r = params.wheel_radius;
    const double tau = torques.right + torques.left;
    const double sn = std::sin(s.pitch);
    const double cs = std::cos(s.pitch);

    const double rhs_forward = tau / r + m.b * sn * s.pitch_rate * s.pitch_rate;
    const double rhs_pitch = m.mgl * sn - tau;
    const double det = m.a * m.c - m.b * m.b * cs * cs;

    Accelerations acc;
    acc.forward = (m.c * rhs_forward - m.b * cs * rhs_pitch) / det;
    acc.pitch = (m.a * rhs_pitch - m.b * cs * rhs_forward) / det;
    acc.yaw = (params.wheel_track / (2.0 * r)) * (torques.right - torques.left) / yaw_inertia(params);
    return acc;
}

WipState step(const WipState& state, const WheelTorques& torques, const WipParams& params, double dt) {
    const double lim = params.torque_limit;
    const WheelTorques clamped{std::clamp(torques.right, -lim, lim), std::clamp(torques.left, -lim, lim)};
    const Accelerations acc = wip_accelerations(state, clamped, params);

    WipState next = state;
    next.v = state.v + acc.forward * dt;
    next.pitch_rate = state.pitch_rate + acc.pitch * dt;
    next.yaw_rate = state.yaw_rate + acc.yaw * dt;
    next.pitch = state.pitch + next.pitch_rate * dt;
    next.yaw = normalize_angle(state.yaw + next.yaw_rate * dt);
    next.x = state.x + next.v * std::cos(next.yaw) * dt;
    next.y = state.y + next.v * std::sin(next.yaw) * dt;
    if (std::abs(next.pitch) >= std::numbers::pi / 2.0) next.fallen = true;
    return next;
}

double pd_yaw(double yaw_rate_cmd, double yaw_rate, double error_derivative, const YawGains& gains, double limit) {
    const double torque = gains.kp * (yaw_rate_cmd - yaw_rate) + gains.kd * error_derivative;
    return std::clamp(torque, -limit, limit);
}

LqrDesign design_balance_lqr(const WipParams& params, const LqrWeights& weights) {
    const LinearModel lin = linearize_wip(params);
    LqrDesign d;
    d.A = lin.A;
    d.B = lin.B;
    d.Q = Eigen::Vector4d(weights.q[0], weights.q[1], weights.q[2], weights.q[3]).asDiagonal();
    d.R = weights.r;
    Eigen::MatrixXd R(1, 1);
    R(0, 0) = weights.r;
    const Eigen::MatrixXd K = solve_lqr(d.A, d.B, d.Q, R);
    d.K = K.row(0);
    return d;
}

WipController::WipController(const WipParams& params, const ControllerConfig& config)
    : params_(params), config_(config), design_(design_balance_lqr(params, config.lqr)) {}

WheelTorques WipController::update(const WipState& state, double v_d, double yaw_rate_d, double dt) {
    const double dv = config_.max_accel * dt;
    v_ref_ += std::clamp(v_d - v_ref_, -dv, dv);
    position_error_ = std::clamp(position_error_ + (state.v - v_ref_) * dt, -config_.position_error_limit,
                                 config_.position_error_limit);

    const Eigen::Vector4d e(state.pitch, state.pitch_rate, position_error_, state.v - v_ref_);
    const double tau = -design_.K.dot(e);

    const double yaw_error = yaw_rate_d - state.yaw_rate;
    const double yaw_error_rate = has_prev_ ? (yaw_error - prev_yaw_error_) / dt : 0.0;
    prev_yaw_error_ = yaw_error;
    has_prev_ = true;
    const double diff = pd_yaw(yaw_rate_d, state.yaw_rate, yaw_error_rate, config_.yaw, params_.torque_limit);

    const double lim = params_.torque_limit;
    return {std::clamp(0.5 * tau + diff, -lim, lim), std::clamp(0.5 * tau - diff, -lim, lim)};
}

}  // namespace telewip
