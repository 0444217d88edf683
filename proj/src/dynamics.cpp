#include "silo/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "silo/errors.hpp"

namespace silo::dynamics {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

struct WheelFrame {
    Corners vx{}, vy{};
};

// Corner velocities by rigid-body transport of (vx, vy, yaw_rate); front
// corners rotated into the steered wheel frame.
WheelFrame wheel_frame_velocities(const ChassisState& s, double steer,
                                  const VehicleParams& p) {
    WheelFrame w;
    const double half_track = 0.5 * p.track;
    const double cd = std::cos(steer);
    const double sd = std::sin(steer);
    for (int c = 0; c < 4; ++c) {
        const bool front = (c == kFL || c == kFR);
        const bool left = (c == kFL || c == kRL);
        const double vcx = s.vx + (left ? -1.0 : 1.0) * s.yaw_rate * half_track;
        const double vcy = s.vy + s.yaw_rate * (front ? p.lf : -p.lr);
        if (front) {
            w.vx[c] = cd * vcx + sd * vcy;
            w.vy[c] = -sd * vcx + cd * vcy;
        } else {
            w.vx[c] = vcx;
            w.vy[c] = vcy;
        }
    }
    return w;
}

void check_finite(const ChassisState& s, const char* who) {
    const auto bad = [&](const char* channel) {
        throw IntegrationError(std::string(who) + ": non-finite value in channel " + channel);
    };
    if (!std::isfinite(s.vx)) bad("vx");
    if (!std::isfinite(s.vy)) bad("vy");
    if (!std::isfinite(s.yaw_rate)) bad("yaw_rate");
    for (int c = 0; c < 4; ++c) {
        if (!std::isfinite(s.omega[c])) {
            bad((std::string("omega_") + kCornerNames[c]).c_str());
        }
    }
}

void apply_offsets(CornerForces& f, const ForceOffsets* offsets) {
    if (!offsets) return;
    for (int c = 0; c < 4; ++c) {
        f.fx[c] += offsets->fx[c];
        f.fy[c] += offsets->fy[c];
    }
}

CornerForces tire_curve(const CornerSlips& slips, const Corners& fz,
                        const TireCoeffs& t) {
    const AxisCoeffs longi{t.bx, t.cx, t.dx, t.ex};
    const AxisCoeffs lat{t.by, t.cy, t.dy, t.ey};
    CornerForces f;
    f.fz = fz;
    for (int c = 0; c < 4; ++c) {
        f.fx[c] = pacejka_force(slips.lambda[c], fz[c], longi);
        f.fy[c] = pacejka_force(slips.alpha[c], fz[c], lat);
    }
    return f;
}

// Lateral force channels are slip-aligned (same sign as the slip angle);
// the chassis feels the opposing reaction. Flipping here keeps the tire
// curve and the chassis force/moment sums literal while the closed vehicle
// loop stays restoring.
CornerForces chassis_reaction(const CornerForces& f) {
    CornerForces out = f;
    for (int c = 0; c < 4; ++c) out.fy[c] = -f.fy[c];
    return out;
}

// Loads from the step's own accelerations: a pre-pass with static loads
// estimates (ax, ay), the final loads follow from the transfer model.
Corners transfer_loads(const ChassisState& s, const DriverInputs& u,
                       const VehicleParams& p, const TireCoeffs& tires,
                       const CornerSlips& slips, const ForceOffsets* offsets,
                       int* clamps) {
    const Corners fz0 = vertical_loads(p, 0.0, 0.0, nullptr);
    CornerForces f0 = tire_curve(slips, fz0, tires);
    apply_offsets(f0, offsets);
    const ChassisDerivatives d0 = chassis_derivatives(s, chassis_reaction(f0), u.steer, p);
    return vertical_loads(p, d0.fx_total / p.mass, d0.fy_total / p.mass, clamps);
}

void finish_evaluation(Evaluation& e, const ChassisState& s, const DriverInputs& u,
                       const VehicleParams& p, const ForceOffsets* offsets) {
    e.applied = e.raw;
    apply_offsets(e.applied, offsets);
    e.chassis = chassis_derivatives(s, chassis_reaction(e.applied), u.steer, p);
    e.ax = e.chassis.fx_total / p.mass;
    e.ay = e.chassis.fy_total / p.mass;
    const WheelTorques tq = wheel_torques(u, p);
    for (int c = 0; c < 4; ++c) {
        e.omega_dot[c] = (tq.traction[c] - tq.brake[c] -
                          p.wheel_radius[c] * e.applied.fx[c]) /
                         p.wheel_inertia;
    }
}

void integrate(ChassisState& s, const Evaluation& e, double h) {
    s.vx += h * e.chassis.vx_dot;
    s.vy += h * e.chassis.vy_dot;
    s.yaw_rate += h * e.chassis.yaw_acc;
    for (int c = 0; c < 4; ++c) {
        s.omega[c] += h * e.omega_dot[c];
        // reverse spin is out of scope; a locked wheel stays locked
        if (s.omega[c] < 0.0) s.omega[c] = 0.0;
    }
}

}  // namespace

double pacejka_force(double slip, double fz, const AxisCoeffs& coeffs) {
    if (!std::isfinite(slip)) throw DomainError("pacejka_force: non-finite slip");
    if (!(fz >= 0.0)) throw DomainError("pacejka_force: negative vertical load");
    const double bs = coeffs.b * slip;
    const double arg = bs - coeffs.e * (bs - std::atan(bs));
    return fz * coeffs.d * std::sin(coeffs.c * std::atan(arg));
}

CornerSlips compute_slips(const ChassisState& state, double steer,
                          const VehicleParams& params, double eps_v) {
    const WheelFrame w = wheel_frame_velocities(state, steer, params);
    CornerSlips out;
    for (int c = 0; c < 4; ++c) {
        const double rolling = params.wheel_radius[c] * state.omega[c];
        const double s_ref = std::max(rolling, w.vx[c]);
        double lambda = (rolling - w.vx[c]) / std::max(s_ref, eps_v);
        lambda *= std::clamp(s_ref / (2.0 * eps_v), 0.0, 1.0);
        out.lambda[c] = lambda;
        out.alpha[c] = std::atan(w.vy[c] / std::max(w.vx[c], eps_v));
        out.wheel_vx[c] = w.vx[c];
    }
    return out;
}

Corners vertical_loads(const VehicleParams& params, double ax, double ay,
                       int* clamped) {
    const double wheelbase = params.lf + params.lr;
    const double static_front =
        params.mass * params.gravity * params.lr / (2.0 * wheelbase);
    const double static_rear =
        params.mass * params.gravity * params.lf / (2.0 * wheelbase);
    const double longitudinal = params.mass * ax * params.cg_height / (2.0 * wheelbase);
    const double lateral_front = (params.mass * params.lr / wheelbase) * ay *
                                 params.cg_height / params.track;
    const double lateral_rear = (params.mass * params.lf / wheelbase) * ay *
                                params.cg_height / params.track;
    Corners fz{static_front - longitudinal - lateral_front,
               static_front - longitudinal + lateral_front,
               static_rear + longitudinal - lateral_rear,
               static_rear + longitudinal + lateral_rear};
    for (double& f : fz) {
        if (f < 0.0) {
            f = 0.0;
            if (clamped) ++(*clamped);
        }
    }
    return fz;
}

ChassisDerivatives chassis_derivatives(const ChassisState& state,
                                       const CornerForces& f, double steer,
                                       const VehicleParams& p) {
    const double cd = std::cos(steer);
    const double sd = std::sin(steer);
    const double half_track = 0.5 * p.track;

    ChassisDerivatives d;
    d.fx_total = (f.fx[kFL] + f.fx[kFR]) * cd - (f.fy[kFL] + f.fy[kFR]) * sd +
                 f.fx[kRL] + f.fx[kRR];
    d.fy_total = (f.fx[kFL] + f.fx[kFR]) * sd + (f.fy[kFL] + f.fy[kFR]) * cd +
                 f.fy[kRL] + f.fy[kRR];
    d.yaw_moment = p.lf * (f.fy[kFL] + f.fy[kFR]) * cd +
                   half_track * (f.fy[kFL] - f.fy[kFR]) * sd -
                   half_track * (f.fx[kFL] - f.fx[kFR]) * cd +
                   p.lf * (f.fx[kFL] + f.fx[kFR]) * sd -
                   p.lr * (f.fy[kRL] + f.fy[kRR]) -
                   half_track * (f.fx[kRL] - f.fx[kRR]);
    d.vx_dot = d.fx_total / p.mass + state.vy * state.yaw_rate;
    d.vy_dot = d.fy_total / p.mass - state.vx * state.yaw_rate;
    d.yaw_acc = d.yaw_moment / p.yaw_inertia;
    return d;
}

WheelTorques wheel_torques(const DriverInputs& inputs, const VehicleParams& params) {
    const auto it = params.gear_ratio.find(inputs.gear);
    if (it == params.gear_ratio.end()) {
        throw ConfigError("unknown gear " + std::to_string(inputs.gear) +
                          " (not in gear_ratio table)");
    }
    WheelTorques t;
    const double rear_traction = inputs.engine_torque * it->second / 2.0;
    for (int c = 0; c < 4; ++c) {
        t.brake[c] = params.brake_gain * inputs.brake[c];
        t.traction[c] = (c == kRL || c == kRR) ? rear_traction : 0.0;
    }
    return t;
}

Evaluation evaluate_benchmark(const ChassisState& state, const DriverInputs& inputs,
                              const VehicleParams& params, const TireCoeffs& tires,
                              const ForceOffsets* offsets) {
    const CornerSlips slips = compute_slips(state, inputs.steer, params, tires.eps_v);
    Evaluation e;
    e.load_clamps = 0;
    const Corners fz =
        transfer_loads(state, inputs, params, tires, slips, offsets, &e.load_clamps);
    e.raw = tire_curve(slips, fz, tires);
    e.steady = e.raw;
    e.wheel_vx = slips.wheel_vx;
    finish_evaluation(e, state, inputs, params, offsets);
    return e;
}

MeasuredOutputs outputs_from(const Evaluation& eval, const ChassisState& state) {
    MeasuredOutputs y;
    y.ax = eval.ax;
    y.ay = eval.ay;
    y.yaw_rate = state.yaw_rate;
    y.omega = state.omega;
    return y;
}

StepResult step_benchmark(const ChassisState& state, const DriverInputs& inputs,
                          const VehicleParams& params, const TireCoeffs& tires,
                          double dt, const ForceOffsets* offsets) {
    if (!(dt > 0.0)) throw ConfigError("step_benchmark: dt must be positive");
    check_finite(state, "step_benchmark");
    const int n = std::max(1, params.substeps);
    const double h = dt / n;
    ChassisState cur = state;
    for (int i = 0; i < n; ++i) {
        const Evaluation e = evaluate_benchmark(cur, inputs, params, tires, offsets);
        integrate(cur, e, h);
    }
    check_finite(cur, "step_benchmark");
    const Evaluation out = evaluate_benchmark(cur, inputs, params, tires, offsets);
    return StepResult{cur, outputs_from(out, cur), out.raw};
}

Evaluation evaluate_plant(const PlantState& state, const DriverInputs& inputs,
                          const PlantParams& params, const ForceOffsets* offsets) {
    const VehicleParams& p = params.vehicle;
    const TireCoeffs& tires = params.tires;
    const CornerSlips slips =
        compute_slips(state.chassis, inputs.steer, p, tires.eps_v);

    Evaluation e;
    e.load_clamps = 0;
    Corners fz;
    if (params.extras.load_filter_hz > 0.0) {
        fz = vertical_loads(p, state.ax_filt, state.ay_filt, &e.load_clamps);
    } else {
        fz = transfer_loads(state.chassis, inputs, p, tires, slips, offsets,
                            &e.load_clamps);
    }

    CornerForces steady = tire_curve(slips, fz, tires);
    if (params.extras.friction_ellipse) {
        for (int c = 0; c < 4; ++c) {
            const double cap = tires.dx * fz[c];
            if (cap > 0.0) {
                const double ratio = steady.fx[c] / cap;
                steady.fy[c] *= std::sqrt(std::max(0.0, 1.0 - ratio * ratio));
            }
        }
    }
    e.steady = steady;
    if (params.extras.relaxation_length > 0.0) {
        e.raw.fx = state.fx_lag;
        e.raw.fy = state.fy_lag;
        e.raw.fz = fz;
    } else {
        e.raw = steady;
    }
    e.wheel_vx = slips.wheel_vx;
    finish_evaluation(e, state.chassis, inputs, p, offsets);
    return e;
}

PlantStepResult step_plant(const PlantState& state, const DriverInputs& inputs,
                           const PlantParams& params, double dt,
                           const ForceOffsets* offsets) {
    if (!(dt > 0.0)) throw ConfigError("step_plant: dt must be positive");
    check_finite(state.chassis, "step_plant");
    const VehicleParams& p = params.vehicle;
    const int n = std::max(1, p.substeps);
    const double h = dt / n;
    PlantState cur = state;
    for (int i = 0; i < n; ++i) {
        const Evaluation e = evaluate_plant(cur, inputs, params, offsets);
        integrate(cur.chassis, e, h);
        if (params.extras.relaxation_length > 0.0) {
            for (int c = 0; c < 4; ++c) {
                const double rate =
                    std::max(std::abs(e.wheel_vx[c]), params.tires.eps_v) /
                    params.extras.relaxation_length;
                cur.fx_lag[c] += h * rate * (e.steady.fx[c] - cur.fx_lag[c]);
                cur.fy_lag[c] += h * rate * (e.steady.fy[c] - cur.fy_lag[c]);
            }
        } else {
            cur.fx_lag = e.steady.fx;
            cur.fy_lag = e.steady.fy;
        }
        if (params.extras.load_filter_hz > 0.0) {
            const double tau = 1.0 / (kTwoPi * params.extras.load_filter_hz);
            const double blend = h / (tau + h);
            cur.ax_filt += blend * (e.ax - cur.ax_filt);
            cur.ay_filt += blend * (e.ay - cur.ay_filt);
        } else {
            cur.ax_filt = e.ax;
            cur.ay_filt = e.ay;
        }
    }
    check_finite(cur.chassis, "step_plant");
    for (int c = 0; c < 4; ++c) {
        if (!std::isfinite(cur.fx_lag[c]) || !std::isfinite(cur.fy_lag[c])) {
            throw IntegrationError(std::string("step_plant: non-finite tire lag at corner ") +
                                   kCornerNames[c]);
        }
    }
    const Evaluation out = evaluate_plant(cur, inputs, params, offsets);
    return PlantStepResult{cur, outputs_from(out, cur.chassis), out.raw};
}

double side_slip_angle(double vy, double vx, double guard) {
    return std::atan(vy / std::max(vx, guard));
}

}  // namespace silo::dynamics
