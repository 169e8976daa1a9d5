#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>

namespace telewip {

/// Physical parameters of the planar wheeled inverted pendulum.
///
/// `com_height` is measured from the ground, so the pendulum length about the
/// wheel axle is `com_height - wheel_radius`. `wheel_mass` is per wheel.
struct WipParams {
    double body_mass = 15.0;          // kg
    double wheel_mass = 1.5;          // kg, each
    double wheel_radius = 0.125;      // m
    double com_height = 0.5;          // m
    double body_pitch_inertia = 0.6;  // kg m^2 about the CoM
    double body_yaw_inertia = 0.4;    // kg m^2 about the vertical axis
    double wheel_track = 0.4;         // m
    double gravity = 9.81;            // m/s^2
    double torque_limit = 20.0;       // N m per wheel

    /// Throws ModelError on non-physical values. Gravity may be zero.
    void validate() const;

    double pendulum_length() const { return com_height - wheel_radius; }
};

/// Full planar robot state. Yaw lives in (-pi, pi]; pitch is positive when the
/// body leans toward +forward.
struct WipState {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
    double pitch = 0.0;
    double v = 0.0;
    double pitch_rate = 0.0;
    double yaw_rate = 0.0;
    bool fallen = false;

    friend bool operator==(const WipState&, const WipState&) = default;
};

struct WheelTorques {
    double right = 0.0;
    double left = 0.0;
};

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DesignError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pitch/velocity subsystem linearized about upright, state order
/// [pitch, pitch_rate, x, v], input is the summed wheel torque.
struct LinearModel {
    Eigen::Matrix4d A;
    Eigen::Vector4d B;
};

LinearModel linearize_wip(const WipParams& params);

struct Accelerations {
    double forward = 0.0;
    double pitch = 0.0;
    double yaw = 0.0;
};

/// Nonlinear equations of motion evaluated at `state`.
Accelerations wip_accelerations(const WipState& state, const WheelTorques& torques, const WipParams& params);

/// One semi-implicit Euler step. Torques are clamped to the configured limit.
/// Sets `fallen` once |pitch| reaches pi/2.
WipState step(const WipState& state, const WheelTorques& torques, const WipParams& params, double dt);

/// Map an angle to (-pi, pi].
double normalize_angle(double angle);

// ---------------------------------------------------------------------------
// LQR

struct LqrSolution {
    Eigen::MatrixXd K;
    Eigen::MatrixXd P;
    double residual = 0.0;  // inf-norm of the Riccati residual
};

/// Continuous-time infinite-horizon LQR. The stabilizing Riccati solution is
/// taken from the stable invariant subspace of the Hamiltonian matrix, then
/// polished with Newton-Kleinman iterations until the residual stalls.
/// Throws DesignError if the pair is not stabilizable or the iteration fails.
LqrSolution solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                       const Eigen::MatrixXd& R);

Eigen::MatrixXd solve_lqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                          const Eigen::MatrixXd& R);

/// inf-norm of A'P + PA - P B R^-1 B' P + Q.
double riccati_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                        const Eigen::MatrixXd& R, const Eigen::MatrixXd& P);

/// Largest real part among the eigenvalues of M.
double spectral_abscissa(const Eigen::MatrixXd& M);

struct LqrWeights {
    std::array<double, 4> q{200.0, 1.0, 10.0, 40.0};  // [pitch, pitch_rate, x, v]
    double r = 1.0;
};

struct LqrDesign {
    Eigen::Matrix4d A;
    Eigen::Vector4d B;
    Eigen::Matrix4d Q;
    double R = 1.0;
    Eigen::RowVector4d K;
};

LqrDesign design_balance_lqr(const WipParams& params, const LqrWeights& weights);

// ---------------------------------------------------------------------------
// Yaw

struct YawGains {
    double kp = 2.0;
    double kd = 0.02;
};

/// Differential torque from the yaw-rate error and its time derivative,
/// saturated at `limit`. Added to the right wheel, subtracted from the left.
double pd_yaw(double yaw_rate_cmd, double yaw_rate, double error_derivative, const YawGains& gains,
              double limit);

struct ControllerConfig {
    LqrWeights lqr;
    YawGains yaw;
    double max_accel = 1.5;             // slew limit on the forward reference, m/s^2
    double position_error_limit = 0.5;  // clamp on the integrated tracking error, m
};

/// Balance (LQR, deviation coordinates) plus turning (PD) controller.
///
/// The forward reference is tracked in deviation coordinates
/// [pitch, pitch_rate, x - x_ref, v - v_ref] where x_ref integrates the
/// slew-limited velocity reference.
class WipController {
public:
    WipController(const WipParams& params, const ControllerConfig& config);

    WheelTorques update(const WipState& state, double v_d, double yaw_rate_d, double dt);

    const LqrDesign& design() const { return design_; }
    double velocity_reference() const { return v_ref_; }

private:
    WipParams params_;
    ControllerConfig config_;
    LqrDesign design_;
    double v_ref_ = 0.0;
    double position_error_ = 0.0;
    double prev_yaw_error_ = 0.0;
    bool has_prev_ = false;
};

}  // namespace telewip
