#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "silo/predictor.hpp"

namespace silo::observer {

// One nonzero of the sparse correction matrix: state-or-extended row label,
// output column label, owning parameter and its sign.
struct GainEntry {
    std::string row;
    std::string col;
    std::string param;
    double sign = 1.0;
};

struct GainTemplate {
    std::vector<std::string> param_names;  // defines the ordering of k
    Eigen::VectorXd lower, upper;          // aligned bounds
    std::vector<GainEntry> entries;

    Eigen::Index param_count() const {
        return static_cast<Eigen::Index>(param_names.size());
    }
    Eigen::Index param_index(const std::string& name) const;  // ConfigError if unknown
    void validate() const;
};

// The paper's sparse layout for the 7-state predictor: wheel speeds correct
// the longitudinal speed, yaw rate and wheel speeds correct themselves,
// the longitudinal-acceleration innovation drives the longitudinal force
// offsets, the yaw-rate innovation drives the lateral force offsets with
// the rear rows sign-reversed.
GainTemplate benchmark_gain_template();

// Dense K from the sparse template: zero outside the template coordinates,
// sign * k[param] on them. Out-of-bounds parameters produce warnings, not
// errors (the tuner probes the box edges).
Eigen::MatrixXd assemble_gain(const GainTemplate& tmpl, const Eigen::VectorXd& ktilde,
                              const PredictorInfo& info,
                              std::vector<std::string>* warnings = nullptr);

}  // namespace silo::observer
