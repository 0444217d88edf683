#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "silo/gp.hpp"

namespace silo::tuner {

// Expected improvement below `best` at `point` under the posterior
// (minimization form). Returned in original cost units, never negative.
double expected_improvement(const Surrogate& surrogate, const Eigen::VectorXd& point,
                            double best);

struct AcquisitionSettings {
    int candidates = 2048;  // shifted-Halton candidate count
    int refine_top = 8;     // candidates kept for coordinate refinement
    std::vector<double> refine_steps = {0.05, 0.02, 0.008, 0.003};  // box fractions
};

struct Proposal {
    Eigen::VectorXd point;
    double ei = 0.0;
    bool variance_fallback = false;  // EI landscape was flat, explored max variance
};

// Maximizes EI over a seeded quasi-random candidate set plus coordinate
// refinement of the best candidates. The result is always inside the box.
Proposal propose_next(const Surrogate& surrogate, const Box& bounds,
                      std::uint64_t seed, const AcquisitionSettings& settings = {});

// Deterministic shifted-Halton sequence in the unit cube (one row per point).
Eigen::MatrixXd halton_points(int count, Eigen::Index dim, std::uint64_t seed);

struct TuneConfig {
    int n_iter = 100;
    int n_init = 4;
    std::uint64_t seed = 1;
    int hyper_starts = 32;
    AcquisitionSettings acquisition;

    void validate() const;  // 0 < n_init < n_iter
};

TuneConfig load_tune_config(const std::filesystem::path& path);

struct TuneRecord {
    int iteration = 0;  // evaluation index, 0-based
    Eigen::VectorXd point;
    double cost = 0.0;
    double incumbent = 0.0;  // best cost seen up to and including this row
    bool diverged = false;   // cost is the divergence penalty, not a simulation
};

struct TuneResult {
    Eigen::VectorXd best_point;
    double best_cost = 0.0;
    int best_iteration = 0;
    std::vector<TuneRecord> history;
};

// Cost evaluation; nullopt signals a diverged simulation, which the loop
// replaces with 10x the worst finite cost so far (1e9 before any).
using Objective = std::function<std::optional<double>(const Eigen::VectorXd&)>;

// N_init uniform seeded draws, then fit / propose / evaluate / enlarge up to
// n_iter total evaluations; the optimum is the argmin over everything
// evaluated (earliest index wins ties).
TuneResult tune(const Objective& objective, const Box& bounds, const TuneConfig& config);

void save_history_csv(const TuneResult& result,
                      const std::vector<std::string>& param_names,
                      const std::filesystem::path& path);

}  // namespace silo::tuner
