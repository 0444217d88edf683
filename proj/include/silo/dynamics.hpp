#pragma once

#include "silo/vehicle.hpp"

namespace silo::dynamics {

// Planar chassis states plus the four wheel speeds. Ordering is fixed:
// vx, vy, yaw_rate, omega_fl, omega_fr, omega_rl, omega_rr.
struct ChassisState {
    double vx = 0.0;        // m/s
    double vy = 0.0;        // m/s
    double yaw_rate = 0.0;  // rad/s
    Corners omega{0.0, 0.0, 0.0, 0.0};  // rad/s
};

struct DriverInputs {
    double steer = 0.0;           // rad, front axle, equal on both corners
    Corners brake{0.0, 0.0, 0.0, 0.0};  // bar
    double engine_torque = 0.0;   // N m
    int gear = 1;
};

struct CornerForces {
    Corners fx{}, fy{}, fz{};  // N
};

// Sensor-equivalent outputs: specific accelerations, yaw rate, wheel speeds.
// Ordering fixed: ax, ay, yaw_rate, omega_fl, omega_fr, omega_rl, omega_rr.
struct MeasuredOutputs {
    double ax = 0.0;        // m/s^2
    double ay = 0.0;        // m/s^2
    double yaw_rate = 0.0;  // rad/s
    Corners omega{};        // rad/s
};

// Additive offsets on the eight planar tire forces (the observer's
// extended-state feedback path into the model).
struct ForceOffsets {
    Corners fx{}, fy{};
};

// One Pacejka axis.
struct AxisCoeffs {
    double b, c, d, e;
};

// F = Fz * D * sin(C * atan(B*s - E*(B*s - atan(B*s)))).
// Throws DomainError for non-finite slip or negative load.
double pacejka_force(double slip, double fz, const AxisCoeffs& coeffs);

struct CornerSlips {
    Corners lambda{};    // longitudinal slip
    Corners alpha{};     // lateral slip angle, rad
    Corners wheel_vx{};  // wheel-frame longitudinal speed, m/s
};

// Rigid-body transport of (vx, vy, yaw_rate) to each corner, front corners
// rotated by the steering angle, then the slip definitions with the eps_v
// guard. Longitudinal slip fades linearly to zero below 2*eps_v.
CornerSlips compute_slips(const ChassisState& state, double steer,
                          const VehicleParams& params, double eps_v);

// Static split plus longitudinal and per-axle lateral transfer. Negative
// corners are clamped to zero; `clamped`, when given, accumulates the count.
Corners vertical_loads(const VehicleParams& params, double ax, double ay,
                       int* clamped = nullptr);

struct ChassisDerivatives {
    double vx_dot = 0.0;
    double vy_dot = 0.0;
    double yaw_acc = 0.0;
    double fx_total = 0.0;   // chassis-frame force sums
    double fy_total = 0.0;
    double yaw_moment = 0.0;
};

ChassisDerivatives chassis_derivatives(const ChassisState& state,
                                       const CornerForces& forces, double steer,
                                       const VehicleParams& params);

struct WheelTorques {
    Corners brake{};     // N m
    Corners traction{};  // N m
};

// Brake torque from pressure, traction torque split 50/50 across the rear
// axle. Throws ConfigError for a gear missing from the ratio table.
WheelTorques wheel_torques(const DriverInputs& inputs, const VehicleParams& params);

// Everything derived from one state/input pair: tire forces (raw tire-model
// values and applied values including offsets), chassis force sums and
// derivatives, wheel accelerations.
struct Evaluation {
    CornerForces raw;      // tire forces reported by the model (no offsets)
    CornerForces steady;   // instantaneous tire-curve target (plant lag input)
    CornerForces applied;  // raw + offsets; drives the dynamics
    ChassisDerivatives chassis;
    Corners omega_dot{};
    Corners wheel_vx{};    // wheel-frame longitudinal speeds
    double ax = 0.0;       // fx_total / mass
    double ay = 0.0;       // fy_total / mass
    int load_clamps = 0;
};

Evaluation evaluate_benchmark(const ChassisState& state, const DriverInputs& inputs,
                              const VehicleParams& params, const TireCoeffs& tires,
                              const ForceOffsets* offsets = nullptr);

struct StepResult {
    ChassisState state;
    MeasuredOutputs outputs;  // evaluated at the new state
    CornerForces forces;      // raw tire forces at the new state
};

// One forward-Euler step of length dt (integrated with params.substeps
// internal substeps), outputs and forces evaluated at the new state.
// Throws IntegrationError naming the channel if the state leaves the
// finite range.
StepResult step_benchmark(const ChassisState& state, const DriverInputs& inputs,
                          const VehicleParams& params, const TireCoeffs& tires,
                          double dt, const ForceOffsets* offsets = nullptr);

// Higher-fidelity stand-in for an external multibody simulator: benchmark
// structure plus friction ellipse, tire relaxation and filtered load
// transfer, each individually switchable through PlantExtras.
struct PlantParams {
    VehicleParams vehicle;
    TireCoeffs tires;
    PlantExtras extras;
};

struct PlantState {
    ChassisState chassis;
    Corners fx_lag{}, fy_lag{};  // relaxed tire forces, N
    double ax_filt = 0.0, ay_filt = 0.0;  // filtered accelerations, m/s^2
};

Evaluation evaluate_plant(const PlantState& state, const DriverInputs& inputs,
                          const PlantParams& params,
                          const ForceOffsets* offsets = nullptr);

struct PlantStepResult {
    PlantState state;
    MeasuredOutputs outputs;
    CornerForces forces;
};

PlantStepResult step_plant(const PlantState& state, const DriverInputs& inputs,
                           const PlantParams& params, double dt,
                           const ForceOffsets* offsets = nullptr);

MeasuredOutputs outputs_from(const Evaluation& eval, const ChassisState& state);

// arctan(vy / max(vx, guard)); the shared side-slip definition.
double side_slip_angle(double vy, double vx, double guard = 0.5);

}  // namespace silo::dynamics
