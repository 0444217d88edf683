#include "silo/cost.hpp"

#include <cmath>

#include "silo/errors.hpp"

namespace silo::tuner {

Eigen::VectorXd default_weights(const dataio::Dataset& dataset,
                                const std::vector<std::string>& channels) {
    Eigen::VectorXd w(static_cast<Eigen::Index>(channels.size()));
    for (std::size_t i = 0; i < channels.size(); ++i) {
        const auto& values = dataset.at(channels[i]);
        double sum = 0.0;
        for (double v : values) sum += v * v;
        const double norm = std::sqrt(sum);
        if (!(norm > 0.0)) {
            throw ConfigError("default_weights: channel '" + channels[i] +
                              "' has zero norm");
        }
        w(static_cast<Eigen::Index>(i)) = 1.0 / norm;
    }
    return w;
}

CostSpec default_cost_spec(const dataio::Dataset& dataset) {
    CostSpec spec;
    const auto& states = dataio::truth_state_channels();
    const auto& forces = dataio::truth_force_channels();
    const Eigen::VectorXd ws = default_weights(dataset, states);
    const Eigen::VectorXd wf = default_weights(dataset, forces);
    for (std::size_t i = 0; i < states.size(); ++i) {
        spec.state_terms.emplace_back(states[i], ws(static_cast<Eigen::Index>(i)));
    }
    for (std::size_t i = 0; i < forces.size(); ++i) {
        spec.ext_terms.emplace_back(forces[i], wf(static_cast<Eigen::Index>(i)));
    }
    return spec;
}

double trace_cost(const observer::EstimateTrace& trace, const dataio::Dataset& dataset,
                  const CostSpec& spec) {
    const std::size_t rows = trace.rows();
    if (rows == 0) throw DataError("trace_cost: empty trace");
    if (trace.first_step + rows > dataset.rows()) {
        throw DataError("trace_cost: trace extends past the dataset horizon");
    }
    const auto term = [&](const std::string& channel, double weight) {
        const auto& est = trace.at(channel);
        const auto& truth = dataset.at(channel);
        double sum = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            const double e = truth[i + trace.first_step] - est[i];
            sum += e * e;
        }
        return weight * std::sqrt(sum);
    };
    double j = 0.0;
    for (const auto& [channel, weight] : spec.state_terms) j += term(channel, weight);
    for (const auto& [channel, weight] : spec.ext_terms) j += term(channel, weight);
    return j;
}

double cost(const Eigen::VectorXd& ktilde, const dataio::Dataset& dataset,
            observer::Predictor& predictor, const observer::ObserverConfig& config,
            const CostSpec& spec, CostDiagnostics* diagnostics,
            double divergence_penalty) {
    try {
        const observer::EstimateTrace trace =
            observer::run_observer(dataset, predictor, config, ktilde);
        return trace_cost(trace, dataset, spec);
    } catch (const IntegrationError& e) {
        if (diagnostics) {
            diagnostics->diverged = true;
            diagnostics->step = e.step();
            diagnostics->message = e.what();
        }
        return divergence_penalty;
    }
}

TuneResult tune_observer(const dataio::Dataset& dataset, observer::Predictor& predictor,
                         const observer::ObserverConfig& config, const CostSpec& spec,
                         const TuneConfig& tune_config) {
    dataset.require_training();
    Box bounds;
    bounds.lo = config.gain.lower;
    bounds.hi = config.gain.upper;
    const Objective objective = [&](const Eigen::VectorXd& k) -> std::optional<double> {
        CostDiagnostics diag;
        const double j = cost(k, dataset, predictor, config, spec, &diag);
        if (diag.diverged) return std::nullopt;
        return j;
    };
    return tune(objective, bounds, tune_config);
}

}  // namespace silo::tuner
