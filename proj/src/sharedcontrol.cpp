#include "telewip/sharedcontrol.hpp"

#include <algorithm>
#include <cmath>

namespace telewip {

double AxisMapping::eval(double displacement) const {
    const double a = std::abs(displacement);
    double out = 0.0;
    if (a <= deadband) {
        out = 0.0;
    } else if (a <= knee) {
        out = slope_low * (a - deadband);
    } else {
        out = slope_low * (knee - deadband) + slope_high * (a - knee);
    }
    out = std::min(out, max_output);
    return displacement < 0.0 ? -out : out;
}

double AxisMapping::inverse(double output) const {
    const double target = std::min(std::abs(output), max_output);
    double a = 0.0;
    if (target > 0.0) {
        const double at_knee = slope_low * (knee - deadband);
        if (target <= at_knee && slope_low > 0.0) {
            a = deadband + target / slope_low;
        } else if (slope_high > 0.0) {
            a = knee + (target - at_knee) / slope_high;
        } else {
            a = knee;
        }
    }
    return output < 0.0 ? -a : a;
}

VelocityCommand map_com_to_velocity(const OperatorState& op, const VelocityMapping& mapping) {
    if (!op.calibrated) throw CalibrationRequired();
    return {mapping.forward.eval(op.x_h - op.x_h0), -mapping.yaw.eval(op.y_h - op.y_h0)};
}

OperatorState clamp_travel(OperatorState op, double travel) {
    op.x_h = op.x_h0 + std::clamp(op.x_h - op.x_h0, -travel, travel);
    op.y_h = op.y_h0 + std::clamp(op.y_h - op.y_h0, -travel, travel);
    return op;
}

std::string_view to_string(FeedbackKind kind) {
    switch (kind) {
        case FeedbackKind::NF: return "NF";
        case FeedbackKind::FH: return "FH";
        case FeedbackKind::FC: return "FC";
        case FeedbackKind::Combo: return "Combo";
    }
    return "NF";
}

FeedbackKind parse_feedback_kind(std::string_view text) {
    if (text == "NF" || text == "N-F" || text == "nf") return FeedbackKind::NF;
    if (text == "FH" || text == "F-H" || text == "fh") return FeedbackKind::FH;
    if (text == "FC" || text == "F-C" || text == "fc") return FeedbackKind::FC;
    if (text == "Combo" || text == "combo" || text == "COMBO") return FeedbackKind::Combo;
    throw std::invalid_argument("unknown feedback mode '" + std::string(text) + "'");
}

FeedbackMode::FeedbackMode(FeedbackKind kind, double activation_fc, double activation_fh)
    : kind_(kind), activation_fc_(activation_fc), activation_fh_(activation_fh) {
    if (!(activation_fc > 0.0) || !(activation_fh > 0.0)) {
        throw std::invalid_argument("FeedbackMode: activation distances must be > 0");
    }
    if (kind_ == FeedbackKind::Combo) activation_fh_ = kComboHapticRatio * activation_fc_;
}

double FeedbackMode::max_activation() const {
    double d = 0.0;
    if (compensates()) d = std::max(d, activation_fc_);
    if (haptic()) d = std::max(d, activation_fh_);
    return d;
}

double compensate_yaw(double yaw_rate_d, double f_total, const ForceParams& params, double yaw_rate_max) {
    return std::clamp(params.lambda * yaw_rate_d + f_total, -yaw_rate_max, yaw_rate_max);
}

HmiForceCommand hmi_force(const OperatorState& op, double f_total, const ForceParams& params, double force_limit) {
    HmiForceCommand f;
    f.f_x = std::clamp(-params.k_x * (op.x_h - op.x_h0), -force_limit, force_limit);
    f.f_y = std::clamp(-params.k_y * (op.y_h - op.y_h0) - params.mu * f_total, -force_limit, force_limit);
    return f;
}

SharedControlOutput apply_mode(const FeedbackMode& mode, const VelocityCommand& command, const OperatorState& op,
                               std::span<const ObstacleObservation> observations, const ForceParams& params,
                               const SharedControlLimits& limits) {
    SharedControlOutput out;
    out.v_d = command.v_d;
    out.yaw_rate_d = command.yaw_rate_d;
    if (mode.compensates()) {
        out.f_total_yaw = total_force(observations, GVariant::YawAngle, params, mode.activation_fc());
    }
    if (mode.haptic()) {
        out.f_total_lateral = total_force(observations, GVariant::LateralProjection, params, mode.activation_fh());
    }
    out.yaw_rate_star = compensate_yaw(command.yaw_rate_d, out.f_total_yaw, params, limits.yaw_rate_max);
    out.hmi = hmi_force(op, out.f_total_lateral, params, limits.hmi_force_limit);
    return out;
}

void NeutralCalibrator::start(double t) {
    t0_ = t;
    active_ = true;
    sum_x_ = sum_y_ = 0.0;
    count_ = 0;
}

void NeutralCalibrator::add_sample(double t, double x_h, double y_h) {
    if (!active_ || t < t0_ || t >= t0_ + window_) return;
    sum_x_ += x_h;
    sum_y_ += y_h;
    ++count_;
}

bool NeutralCalibrator::finished(double t) const {
    return active_ && t >= t0_ + window_ && count_ > 0;
}

OperatorState NeutralCalibrator::result() const {
    if (count_ == 0) throw std::logic_error("calibration window contained no samples");
    OperatorState op;
    op.x_h0 = sum_x_ / static_cast<double>(count_);
    op.y_h0 = sum_y_ / static_cast<double>(count_);
    op.x_h = op.x_h0;
    op.y_h = op.y_h0;
    op.calibrated = true;
    return op;
}

}  // namespace telewip
