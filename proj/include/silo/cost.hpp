#pragma once

#include <string>
#include <utility>
#include <vector>

#include "silo/bayesopt.hpp"
#include "silo/observer.hpp"

namespace silo::tuner {

// Weighted channels of the simulation-error cost, split into simulator-state
// terms and extended (force) terms.
struct CostSpec {
    std::vector<std::pair<std::string, double>> state_terms;
    std::vector<std::pair<std::string, double>> ext_terms;
};

// w_i = 1 / ||ζ_i||₂ over the full dataset horizon. A zero-norm channel is a
// configuration error naming the channel.
Eigen::VectorXd default_weights(const dataio::Dataset& dataset,
                                const std::vector<std::string>& channels);

// The 7 state channels and 8 force channels with equal-importance weights.
CostSpec default_cost_spec(const dataio::Dataset& dataset);

// Weighted sum of per-channel 2-norm estimation errors over the trace rows.
double trace_cost(const observer::EstimateTrace& trace, const dataio::Dataset& dataset,
                  const CostSpec& spec);

struct CostDiagnostics {
    bool diverged = false;
    long step = -1;
    std::string message;
};

// Full simulation-error cost: one closed-loop observer run plus trace_cost.
// A diverged run yields `divergence_penalty` and sets the diagnostics.
double cost(const Eigen::VectorXd& ktilde, const dataio::Dataset& dataset,
            observer::Predictor& predictor, const observer::ObserverConfig& config,
            const CostSpec& spec, CostDiagnostics* diagnostics = nullptr,
            double divergence_penalty = 1e9);

// Algorithm-1 calibration of the observer gains against one dataset.
TuneResult tune_observer(const dataio::Dataset& dataset, observer::Predictor& predictor,
                         const observer::ObserverConfig& config, const CostSpec& spec,
                         const TuneConfig& tune_config);

}  // namespace silo::tuner
