#pragma once

#include "telewip/forcefield.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace telewip {

/// Operator CoM as sensed by the HMI. The HMI frame has x pointing forward
/// and y pointing to the operator's right.
struct OperatorState {
    double x_h = 0.0;
    double y_h = 0.0;
    double x_h0 = 0.0;
    double y_h0 = 0.0;
    bool calibrated = false;

    friend bool operator==(const OperatorState&, const OperatorState&) = default;
};

class CalibrationRequired : public std::logic_error {
public:
    CalibrationRequired() : std::logic_error("operator neutral stance is not calibrated") {}
};

/// Odd piecewise-linear shaping of one HMI axis: zero inside the dead-band,
/// `slope_low` up to the knee, `slope_high` beyond it, clamped to `max_output`.
struct AxisMapping {
    double deadband = 0.01;
    double slope_low = 4.0;
    double slope_high = 8.0;
    double knee = 0.06;
    double max_output = 1.5;

    double eval(double displacement) const;
    /// Smallest displacement magnitude producing `output` (used by scripted operators).
    double inverse(double output) const;
};

struct VelocityMapping {
    AxisMapping forward{0.01, 4.0, 8.0, 0.06, 1.5};
    AxisMapping yaw{0.01, 4.0, 8.0, 0.06, 2.0};
};

struct VelocityCommand {
    double v_d = 0.0;
    double yaw_rate_d = 0.0;
};

/// x displacement drives v_d. A lean to the operator's right (+y) commands a
/// clockwise turn, i.e. a negative yaw rate in the robot's z-up frame.
/// Throws CalibrationRequired when the neutral stance has not been captured.
VelocityCommand map_com_to_velocity(const OperatorState& op, const VelocityMapping& mapping);

/// Clamp the operator's displacement from neutral to +-`travel` per axis.
OperatorState clamp_travel(OperatorState op, double travel);

enum class FeedbackKind { NF, FH, FC, Combo };

std::string_view to_string(FeedbackKind kind);
FeedbackKind parse_feedback_kind(std::string_view text);

/// Feedback case with its per-channel activation distances. For Combo the
/// haptic activation is always 1.25x the controller activation.
class FeedbackMode {
public:
    static constexpr double kComboHapticRatio = 1.25;

    FeedbackMode() = default;
    FeedbackMode(FeedbackKind kind, double activation_fc, double activation_fh);

    FeedbackKind kind() const { return kind_; }
    double activation_fc() const { return activation_fc_; }
    double activation_fh() const { return activation_fh_; }
    bool compensates() const { return kind_ == FeedbackKind::FC || kind_ == FeedbackKind::Combo; }
    bool haptic() const { return kind_ == FeedbackKind::FH || kind_ == FeedbackKind::Combo; }
    /// Largest distance at which any active channel consumes observations.
    double max_activation() const;

private:
    FeedbackKind kind_ = FeedbackKind::NF;
    double activation_fc_ = 2.0;
    double activation_fh_ = 2.0;
};

struct HmiForceCommand {
    double f_x = 0.0;
    double f_y = 0.0;

    friend bool operator==(const HmiForceCommand&, const HmiForceCommand&) = default;
};

struct SharedControlLimits {
    double yaw_rate_max = 2.0;     // rad/s
    double hmi_force_limit = 50.0; // N per axis
    double travel_limit = 0.15;    // m
};

/// lambda * yaw_rate_d + f_total, clamped to +-yaw_rate_max.
double compensate_yaw(double yaw_rate_d, double f_total, const ForceParams& params, double yaw_rate_max);

/// Neutral-stance springs on both axes plus the haptic term on y only.
HmiForceCommand hmi_force(const OperatorState& op, double f_total, const ForceParams& params, double force_limit);

struct SharedControlOutput {
    double v_d = 0.0;
    double yaw_rate_d = 0.0;
    double yaw_rate_star = 0.0;
    HmiForceCommand hmi;
    double f_total_yaw = 0.0;
    double f_total_lateral = 0.0;
};

/// One shared-control tick. `observations` must cover `mode.max_activation()`;
/// each channel gates by its own activation distance. The forward command
/// passes through untouched in every mode.
SharedControlOutput apply_mode(const FeedbackMode& mode, const VelocityCommand& command, const OperatorState& op,
                               std::span<const ObstacleObservation> observations, const ForceParams& params,
                               const SharedControlLimits& limits);

/// Captures the neutral stance as the mean of the samples seen during a
/// fixed window (1 s by default) after `start`.
class NeutralCalibrator {
public:
    explicit NeutralCalibrator(double window = 1.0) : window_(window) {}

    void start(double t);
    void add_sample(double t, double x_h, double y_h);
    bool active() const { return active_; }
    double start_time() const { return t0_; }
    /// True once the window has elapsed with at least one sample.
    bool finished(double t) const;
    /// Neutral (x_h0, y_h0) from the samples; throws if none were collected.
    OperatorState result() const;

private:
    double window_;
    double t0_ = 0.0;
    bool active_ = false;
    double sum_x_ = 0.0;
    double sum_y_ = 0.0;
    long count_ = 0;
};

}  // namespace telewip
