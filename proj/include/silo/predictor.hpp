#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "silo/dynamics.hpp"

namespace silo::observer {

struct PredictorInfo {
    std::string id;
    std::vector<std::string> state_labels;   // n_x entries
    std::vector<std::string> input_labels;   // matches the dataset input schema
    std::vector<std::string> output_labels;  // p entries; dataset channel = "meas_" + label
    std::vector<std::string> ext_labels;     // n_z entries; dataset force channels

    Eigen::Index state_dim() const { return static_cast<Eigen::Index>(state_labels.size()); }
    Eigen::Index input_dim() const { return static_cast<Eigen::Index>(input_labels.size()); }
    Eigen::Index output_dim() const { return static_cast<Eigen::Index>(output_labels.size()); }
    Eigen::Index ext_dim() const { return static_cast<Eigen::Index>(ext_labels.size()); }
    Eigen::Index augmented_dim() const { return state_dim() + ext_dim(); }
};

// One-step black-box predictor: (x̂(k-1), u(k-1), δẑ(k-1)) -> (x̃(k), ỹ(k), z̃(k)).
// Implementations must be deterministic for identical arguments and identical
// internal parameterization, and are confined to a single observer run.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual const PredictorInfo& info() const = 0;

    struct Step {
        Eigen::VectorXd x;  // predicted state
        Eigen::VectorXd y;  // predicted outputs, evaluated at the predicted state
        Eigen::VectorXd z;  // raw extended-quantity values (tire-model forces)
    };

    virtual Step step(const Eigen::VectorXd& x_prev, const Eigen::VectorXd& u_prev,
                      const Eigen::VectorXd& dz_prev) = 0;
};

const std::vector<std::string>& standard_input_labels();
const std::vector<std::string>& standard_output_labels();
const std::vector<std::string>& standard_ext_labels();

// The paper-style simplified model as predictor: 7 chassis states.
class BenchmarkPredictor final : public Predictor {
public:
    BenchmarkPredictor(dynamics::VehicleParams params, dynamics::TireCoeffs tires,
                       double dt);
    const PredictorInfo& info() const override { return info_; }
    Step step(const Eigen::VectorXd& x_prev, const Eigen::VectorXd& u_prev,
              const Eigen::VectorXd& dz_prev) override;

private:
    dynamics::VehicleParams params_;
    dynamics::TireCoeffs tires_;
    double dt_;
    PredictorInfo info_;
};

// The in-repo higher-fidelity plant as predictor: 17 states (chassis, tire
// relaxation lags, load-transfer filters).
class PlantPredictor final : public Predictor {
public:
    PlantPredictor(dynamics::PlantParams params, double dt);
    const PredictorInfo& info() const override { return info_; }
    Step step(const Eigen::VectorXd& x_prev, const Eigen::VectorXd& u_prev,
              const Eigen::VectorXd& dz_prev) override;

private:
    dynamics::PlantParams params_;
    double dt_;
    PredictorInfo info_;
};

// Shared vector packing helpers (also used by the xbridge server).
dynamics::DriverInputs unpack_inputs(const Eigen::VectorXd& u);
dynamics::ForceOffsets unpack_offsets(const Eigen::VectorXd& dz);
Eigen::VectorXd pack_outputs(const dynamics::MeasuredOutputs& y);
Eigen::VectorXd pack_forces(const dynamics::CornerForces& f);

}  // namespace silo::observer
