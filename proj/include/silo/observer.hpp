#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "silo/dataset.hpp"
#include "silo/gain.hpp"
#include "silo/predictor.hpp"

namespace silo::observer {

struct ObserverConfig {
    std::string predictor = "benchmark";  // benchmark | plant | extern:<address>
    std::filesystem::path vehicle_config; // parameter file for in-repo predictors
    double dt = 0.01;
    std::string initial_state = "dataset";  // "dataset" | "zero"
    GainTemplate gain;
    std::map<std::string, double> gains;  // tuned values by parameter name
    double extern_timeout_s = 5.0;        // xbridge handshake/step timeout

    // Ordered per the template; parameters missing from `gains` are zero.
    Eigen::VectorXd gains_vector() const;
};

ObserverConfig load_observer_config(const std::filesystem::path& path);

// Optimum fragment ({"gains": {...}}) as written by the tuner.
std::map<std::string, double> load_gains(const std::filesystem::path& path);
void save_gains(const std::map<std::string, double>& gains,
                const std::filesystem::path& path);

// Per-step estimates over a dataset horizon. Row i corresponds to dataset
// row i + first_step (the initial condition itself is not a trace row).
struct EstimateTrace {
    double dt = 0.01;
    std::size_t first_step = 1;
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<double>> channels;

    std::size_t rows() const;
    bool has(const std::string& name) const { return channels.count(name) != 0; }
    const std::vector<double>& at(const std::string& name) const;
};

void save_trace(const EstimateTrace& trace, const std::filesystem::path& path);
EstimateTrace load_trace(const std::filesystem::path& path);

struct Prediction {
    Eigen::VectorXd x_aug;  // [x̃; δz̃] with δz̃(k) = δẑ(k-1)
    Eigen::VectorXd y;      // ỹ(k)
    Eigen::VectorXd z;      // z̃(k)
};

// One predictor call plus the constant extended-state propagation.
Prediction predict_step(Predictor& predictor, const Eigen::VectorXd& x_prev,
                        const Eigen::VectorXd& u_prev, const Eigen::VectorXd& dz_prev);

// x̂ = x̃ + K (y - ỹ). Dimension mismatches are configuration errors.
Eigen::VectorXd correct_step(const Eigen::VectorXd& x_aug_pred,
                             const Eigen::VectorXd& y_meas,
                             const Eigen::VectorXd& y_pred,
                             const Eigen::MatrixXd& gain);

// Closed-loop replay of a dataset: predict, correct, feed the corrected
// extended state back into the next prediction. Throws IntegrationError
// with the step index if the predictor diverges.
EstimateTrace run_observer(const dataio::Dataset& dataset, Predictor& predictor,
                           const ObserverConfig& config, const Eigen::VectorXd& ktilde);

// Pure predictor rollout from the same initial condition, no correction
// arithmetic at all; the k = 0 reference for the zero-gain identity.
EstimateTrace open_loop_rollout(const dataio::Dataset& dataset, Predictor& predictor,
                                const ObserverConfig& config);

// Initial augmented state per the configured policy: dataset ground truth
// where a state label exists as a channel, zero otherwise; δz(0) = 0.
Eigen::VectorXd initial_state(const dataio::Dataset& dataset, const PredictorInfo& info,
                              const ObserverConfig& config);

}  // namespace silo::observer
