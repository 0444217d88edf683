#include "silo/predictor.hpp"

#include <cmath>

#include "silo/dataset.hpp"
#include "silo/errors.hpp"

namespace silo::observer {

namespace {

void check_dims(const PredictorInfo& info, const Eigen::VectorXd& x,
                const Eigen::VectorXd& u, const Eigen::VectorXd& dz) {
    if (x.size() != info.state_dim()) {
        throw ConfigError(info.id + " predictor: state vector has " +
                          std::to_string(x.size()) + " entries, expected " +
                          std::to_string(info.state_dim()));
    }
    if (u.size() != info.input_dim()) {
        throw ConfigError(info.id + " predictor: input vector has " +
                          std::to_string(u.size()) + " entries, expected " +
                          std::to_string(info.input_dim()));
    }
    if (dz.size() != info.ext_dim()) {
        throw ConfigError(info.id + " predictor: extended vector has " +
                          std::to_string(dz.size()) + " entries, expected " +
                          std::to_string(info.ext_dim()));
    }
}

}  // namespace

const std::vector<std::string>& standard_input_labels() {
    return dataio::input_channels();
}

const std::vector<std::string>& standard_output_labels() {
    static const std::vector<std::string> v{"ax",       "ay",       "yaw_rate",
                                            "omega_fl", "omega_fr", "omega_rl",
                                            "omega_rr"};
    return v;
}

const std::vector<std::string>& standard_ext_labels() {
    return dataio::truth_force_channels();
}

dynamics::DriverInputs unpack_inputs(const Eigen::VectorXd& u) {
    dynamics::DriverInputs in;
    in.steer = u(0);
    for (int c = 0; c < 4; ++c) in.brake[c] = u(1 + c);
    in.engine_torque = u(5);
    in.gear = static_cast<int>(std::llround(u(6)));
    return in;
}

dynamics::ForceOffsets unpack_offsets(const Eigen::VectorXd& dz) {
    dynamics::ForceOffsets off;
    for (int c = 0; c < 4; ++c) {
        off.fx[c] = dz(c);
        off.fy[c] = dz(4 + c);
    }
    return off;
}

Eigen::VectorXd pack_outputs(const dynamics::MeasuredOutputs& y) {
    Eigen::VectorXd v(7);
    v << y.ax, y.ay, y.yaw_rate, y.omega[0], y.omega[1], y.omega[2], y.omega[3];
    return v;
}

Eigen::VectorXd pack_forces(const dynamics::CornerForces& f) {
    Eigen::VectorXd v(8);
    v << f.fx[0], f.fx[1], f.fx[2], f.fx[3], f.fy[0], f.fy[1], f.fy[2], f.fy[3];
    return v;
}

BenchmarkPredictor::BenchmarkPredictor(dynamics::VehicleParams params,
                                       dynamics::TireCoeffs tires, double dt)
    : params_(std::move(params)), tires_(tires), dt_(dt) {
    params_.validate();
    tires_.validate();
    if (!(dt_ > 0.0)) throw ConfigError("benchmark predictor: dt must be positive");
    info_.id = "benchmark";
    info_.state_labels = dataio::truth_state_channels();
    info_.input_labels = standard_input_labels();
    info_.output_labels = standard_output_labels();
    info_.ext_labels = standard_ext_labels();
}

Predictor::Step BenchmarkPredictor::step(const Eigen::VectorXd& x_prev,
                                         const Eigen::VectorXd& u_prev,
                                         const Eigen::VectorXd& dz_prev) {
    check_dims(info_, x_prev, u_prev, dz_prev);
    dynamics::ChassisState s;
    s.vx = x_prev(0);
    s.vy = x_prev(1);
    s.yaw_rate = x_prev(2);
    for (int c = 0; c < 4; ++c) s.omega[c] = x_prev(3 + c);

    const dynamics::DriverInputs u = unpack_inputs(u_prev);
    const dynamics::ForceOffsets off = unpack_offsets(dz_prev);
    const dynamics::StepResult r = dynamics::step_benchmark(s, u, params_, tires_, dt_, &off);

    Step out;
    out.x.resize(7);
    out.x << r.state.vx, r.state.vy, r.state.yaw_rate, r.state.omega[0],
        r.state.omega[1], r.state.omega[2], r.state.omega[3];
    out.y = pack_outputs(r.outputs);
    out.z = pack_forces(r.forces);
    return out;
}

PlantPredictor::PlantPredictor(dynamics::PlantParams params, double dt)
    : params_(std::move(params)), dt_(dt) {
    params_.vehicle.validate();
    params_.tires.validate();
    if (!(dt_ > 0.0)) throw ConfigError("plant predictor: dt must be positive");
    info_.id = "plant";
    info_.state_labels = dataio::truth_state_channels();
    for (const char* corner : dynamics::kCornerNames) {
        info_.state_labels.push_back(std::string("relax_fx_") + corner);
    }
    for (const char* corner : dynamics::kCornerNames) {
        info_.state_labels.push_back(std::string("relax_fy_") + corner);
    }
    info_.state_labels.push_back("filt_ax");
    info_.state_labels.push_back("filt_ay");
    info_.input_labels = standard_input_labels();
    info_.output_labels = standard_output_labels();
    info_.ext_labels = standard_ext_labels();
}

Predictor::Step PlantPredictor::step(const Eigen::VectorXd& x_prev,
                                     const Eigen::VectorXd& u_prev,
                                     const Eigen::VectorXd& dz_prev) {
    check_dims(info_, x_prev, u_prev, dz_prev);
    dynamics::PlantState ps;
    ps.chassis.vx = x_prev(0);
    ps.chassis.vy = x_prev(1);
    ps.chassis.yaw_rate = x_prev(2);
    for (int c = 0; c < 4; ++c) ps.chassis.omega[c] = x_prev(3 + c);
    for (int c = 0; c < 4; ++c) ps.fx_lag[c] = x_prev(7 + c);
    for (int c = 0; c < 4; ++c) ps.fy_lag[c] = x_prev(11 + c);
    ps.ax_filt = x_prev(15);
    ps.ay_filt = x_prev(16);

    const dynamics::DriverInputs u = unpack_inputs(u_prev);
    const dynamics::ForceOffsets off = unpack_offsets(dz_prev);
    const dynamics::PlantStepResult r = dynamics::step_plant(ps, u, params_, dt_, &off);

    Step out;
    out.x.resize(17);
    out.x << r.state.chassis.vx, r.state.chassis.vy, r.state.chassis.yaw_rate,
        r.state.chassis.omega[0], r.state.chassis.omega[1], r.state.chassis.omega[2],
        r.state.chassis.omega[3], r.state.fx_lag[0], r.state.fx_lag[1],
        r.state.fx_lag[2], r.state.fx_lag[3], r.state.fy_lag[0], r.state.fy_lag[1],
        r.state.fy_lag[2], r.state.fy_lag[3], r.state.ax_filt, r.state.ay_filt;
    out.y = pack_outputs(r.outputs);
    out.z = pack_forces(r.forces);
    return out;
}

}  // namespace silo::observer
