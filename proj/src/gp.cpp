#include "silo/gp.hpp"

#include <cmath>

#include "silo/errors.hpp"
#include "silo/rng.hpp"

namespace silo::tuner {

namespace {
constexpr double kSqrt5 = 2.2360679774997896964091736687747;
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}  // namespace

void Box::validate() const {
    if (lo.size() == 0 || lo.size() != hi.size()) {
        throw ConfigError("bounds box must have matching, non-empty lo/hi");
    }
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        if (!(lo(i) < hi(i))) {
            throw ConfigError("bounds box needs lo < hi in dimension " + std::to_string(i));
        }
    }
}

bool Box::contains(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) return false;
    for (Eigen::Index i = 0; i < dim(); ++i) {
        if (x(i) < lo(i) || x(i) > hi(i)) return false;
    }
    return true;
}

Eigen::VectorXd Box::clip(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lo).cwiseMin(hi);
}

Eigen::VectorXd Box::normalize(const Eigen::VectorXd& x) const {
    return (x - lo).cwiseQuotient(hi - lo);
}

Eigen::VectorXd Box::denormalize(const Eigen::VectorXd& u) const {
    return lo + u.cwiseProduct(hi - lo);
}

double matern52(double r) {
    return (1.0 + kSqrt5 * r + 5.0 / 3.0 * r * r) * std::exp(-kSqrt5 * r);
}

namespace {

double row_distance(const Eigen::MatrixXd& x, Eigen::Index i, Eigen::Index j,
                    const Eigen::VectorXd& lengths) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
        const double d = (x(i, k) - x(j, k)) / lengths(k);
        sum += d * d;
    }
    return std::sqrt(sum);
}

double point_distance(const Eigen::MatrixXd& x, Eigen::Index i,
                      const Eigen::VectorXd& q, const Eigen::VectorXd& lengths) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
        const double d = (x(i, k) - q(k)) / lengths(k);
        sum += d * d;
    }
    return std::sqrt(sum);
}

}  // namespace

bool Surrogate::factorize(const GpHyper& hyper, Eigen::LLT<Eigen::MatrixXd>* llt,
                          Eigen::VectorXd* alpha, double* lml) const {
    const Eigen::Index n = x_norm_.rows();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = hyper.signal_var + hyper.noise;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double r = row_distance(x_norm_, i, j, hyper.length_scales);
            K(i, j) = K(j, i) = hyper.signal_var * matern52(r);
        }
    }
    llt->compute(K);
    if (llt->info() != Eigen::Success) return false;
    *alpha = llt->solve(y_std_);
    double log_det_half = 0.0;
    const auto& L = llt->matrixLLT();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(L(i, i) > 0.0)) return false;
        log_det_half += std::log(L(i, i));
    }
    *lml = -0.5 * y_std_.dot(*alpha) - log_det_half -
           0.5 * static_cast<double>(n) * kLog2Pi;
    return std::isfinite(*lml);
}

Surrogate Surrogate::fit_with_hyper(const Eigen::MatrixXd& points,
                                    const Eigen::VectorXd& costs, const Box& bounds,
                                    const GpHyper& hyper) {
    bounds.validate();
    if (points.rows() < 2) throw ConfigError("gp fit needs at least 2 points");
    if (points.cols() != bounds.dim()) {
        throw ConfigError("gp points dimension does not match the bounds box");
    }
    if (costs.size() != points.rows()) {
        throw ConfigError("gp costs length does not match the point count");
    }
    if (hyper.length_scales.size() != bounds.dim()) {
        throw ConfigError("gp hyperparameters need one length scale per dimension");
    }

    Surrogate s;
    s.box_ = bounds;
    s.costs_ = costs;
    s.x_norm_.resize(points.rows(), points.cols());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        s.x_norm_.row(i) = bounds.normalize(points.row(i).transpose()).transpose();
    }

    // a dataset of exact input duplicates carries no geometry to learn from
    bool all_same = true;
    for (Eigen::Index i = 1; i < s.x_norm_.rows() && all_same; ++i) {
        all_same = (s.x_norm_.row(i) - s.x_norm_.row(0)).norm() == 0.0;
    }

    s.y_mean_ = costs.mean();
    const double var = (costs.array() - s.y_mean_).square().mean();
    s.y_scale_ = std::sqrt(var);

    if (all_same || s.y_scale_ < 1e-12) {
        s.degenerate_ = true;
        s.hyper_ = hyper;
        return s;
    }

    s.y_std_ = (costs.array() - s.y_mean_) / s.y_scale_;
    s.hyper_ = hyper;
    if (!s.factorize(hyper, &s.llt_, &s.alpha_, &s.lml_)) {
        throw ConfigError("gp kernel matrix is not positive definite for the given hyperparameters");
    }
    s.tried_.emplace_back(hyper, s.lml_);
    return s;
}

Surrogate Surrogate::fit(const Eigen::MatrixXd& points, const Eigen::VectorXd& costs,
                         const Box& bounds, std::uint64_t seed, int hyper_starts) {
    const Eigen::Index d = bounds.dim();
    GpHyper def;
    def.signal_var = 1.0;
    def.length_scales = Eigen::VectorXd::Constant(d, 0.5);

    Surrogate s = fit_with_hyper(points, costs, bounds, def);
    if (s.degenerate_) return s;

    GpHyper best_hyper = def;
    double best_lml = s.lml_;
    Eigen::LLT<Eigen::MatrixXd> best_llt = s.llt_;
    Eigen::VectorXd best_alpha = s.alpha_;

    Rng rng(mix_seed(seed, 0x6B5));
    for (int c = 1; c < hyper_starts; ++c) {
        GpHyper h;
        h.length_scales.resize(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            h.length_scales(i) = std::exp(rng.uniform(std::log(0.05), std::log(5.0)));
        }
        h.signal_var = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));

        Eigen::LLT<Eigen::MatrixXd> llt;
        Eigen::VectorXd alpha;
        double lml;
        if (!s.factorize(h, &llt, &alpha, &lml)) {
            s.tried_.emplace_back(h, -std::numeric_limits<double>::infinity());
            continue;
        }
        s.tried_.emplace_back(h, lml);
        if (lml > best_lml) {
            best_lml = lml;
            best_hyper = h;
            best_llt = llt;
            best_alpha = alpha;
        }
    }

    s.hyper_ = best_hyper;
    s.lml_ = best_lml;
    s.llt_ = std::move(best_llt);
    s.alpha_ = std::move(best_alpha);
    return s;
}

GpPrediction Surrogate::predict(const Eigen::VectorXd& point) const {
    if (point.size() != box_.dim()) {
        throw ConfigError("gp prediction point dimension mismatch");
    }
    GpPrediction out;
    Eigen::VectorXd q = point;
    if (!box_.contains(q)) {
        q = box_.clip(q);
        out.clipped = true;
    }
    if (degenerate_) {
        out.mean = y_mean_;
        out.variance = y_scale_ * y_scale_;
        return out;
    }
    const Eigen::VectorXd qn = box_.normalize(q);
    const Eigen::Index n = x_norm_.rows();
    Eigen::VectorXd k_star(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k_star(i) = hyper_.signal_var *
                    matern52(point_distance(x_norm_, i, qn, hyper_.length_scales));
    }
    const double mu_std = k_star.dot(alpha_);
    const Eigen::VectorXd v = llt_.solve(k_star);
    const double var_std = std::max(0.0, hyper_.signal_var - k_star.dot(v));
    out.mean = y_mean_ + y_scale_ * mu_std;
    out.variance = var_std * y_scale_ * y_scale_;
    return out;
}

}  // namespace silo::tuner
