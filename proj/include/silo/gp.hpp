#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace silo::tuner {

// Axis-aligned search box.
struct Box {
    Eigen::VectorXd lo, hi;

    Eigen::Index dim() const { return lo.size(); }
    void validate() const;  // ConfigError unless lo < hi componentwise
    bool contains(const Eigen::VectorXd& x) const;
    Eigen::VectorXd clip(const Eigen::VectorXd& x) const;
    Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;    // box -> unit
    Eigen::VectorXd denormalize(const Eigen::VectorXd& u) const;  // unit -> box
};

// Matern-5/2 correlation at scaled distance r.
double matern52(double r);

struct GpHyper {
    double signal_var = 1.0;
    Eigen::VectorXd length_scales;  // per dimension, in unit-box coordinates
    double noise = 1e-8;
};

struct GpPrediction {
    double mean = 0.0;
    double variance = 0.0;
    bool clipped = false;  // query was outside the box and got clipped
};

// Gaussian-process posterior over the tuning cost. Inputs are normalized to
// the unit box through the bounds, costs standardized to zero mean / unit
// variance; hyperparameters are picked by multi-start random search over
// log-space maximizing the log marginal likelihood.
class Surrogate {
public:
    static Surrogate fit(const Eigen::MatrixXd& points, const Eigen::VectorXd& costs,
                         const Box& bounds, std::uint64_t seed, int hyper_starts = 32);
    // Fixed hyperparameters, no search. Used by oracle tests and benchmarks.
    static Surrogate fit_with_hyper(const Eigen::MatrixXd& points,
                                    const Eigen::VectorXd& costs, const Box& bounds,
                                    const GpHyper& hyper);

    GpPrediction predict(const Eigen::VectorXd& point) const;

    double log_marginal_likelihood() const { return lml_; }
    const GpHyper& hyper() const { return hyper_; }
    // every (hyperparameter set, lml) candidate evaluated during fitting
    const std::vector<std::pair<GpHyper, double>>& candidates_tried() const {
        return tried_;
    }
    bool degenerate() const { return degenerate_; }
    Eigen::Index size() const { return costs_.size(); }
    const Box& bounds() const { return box_; }
    double best_cost() const { return costs_.minCoeff(); }

private:
    Surrogate() = default;
    bool factorize(const GpHyper& hyper, Eigen::LLT<Eigen::MatrixXd>* llt,
                   Eigen::VectorXd* alpha, double* lml) const;

    Box box_;
    Eigen::MatrixXd x_norm_;  // n x d
    Eigen::VectorXd costs_;   // original units
    Eigen::VectorXd y_std_;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    GpHyper hyper_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
    double lml_ = 0.0;
    bool degenerate_ = false;
    std::vector<std::pair<GpHyper, double>> tried_;
};

}  // namespace silo::tuner
