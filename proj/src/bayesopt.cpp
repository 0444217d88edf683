#include "silo/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "silo/dataset.hpp"
#include "silo/errors.hpp"
#include "silo/rng.hpp"

namespace silo::tuner {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }
double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

double radical_inverse(int base, long index) {
    double inv = 1.0 / base;
    double factor = inv;
    double value = 0.0;
    while (index > 0) {
        value += static_cast<double>(index % base) * factor;
        index /= base;
        factor *= inv;
    }
    return value;
}

}  // namespace

double expected_improvement(const Surrogate& surrogate, const Eigen::VectorXd& point,
                            double best) {
    const GpPrediction p = surrogate.predict(point);
    const double sigma = std::sqrt(std::max(0.0, p.variance));
    const double gap = best - p.mean;
    if (sigma <= 0.0) return std::max(gap, 0.0);
    const double z = gap / sigma;
    return std::max(0.0, gap * normal_cdf(z) + sigma * normal_pdf(z));
}

Eigen::MatrixXd halton_points(int count, Eigen::Index dim, std::uint64_t seed) {
    if (dim > static_cast<Eigen::Index>(std::size(kPrimes))) {
        throw ConfigError("halton_points supports at most " +
                          std::to_string(std::size(kPrimes)) + " dimensions");
    }
    Rng rng(mix_seed(seed, 0x4A17));
    Eigen::VectorXd shift(dim);
    for (Eigen::Index d = 0; d < dim; ++d) shift(d) = rng.uniform();

    Eigen::MatrixXd points(count, dim);
    for (int i = 0; i < count; ++i) {
        for (Eigen::Index d = 0; d < dim; ++d) {
            const double v = radical_inverse(kPrimes[d], i + 1) + shift(d);
            points(i, d) = v - std::floor(v);
        }
    }
    return points;
}

Proposal propose_next(const Surrogate& surrogate, const Box& bounds,
                      std::uint64_t seed, const AcquisitionSettings& settings) {
    bounds.validate();
    const Eigen::Index d = bounds.dim();
    const double best = surrogate.best_cost();

    const Eigen::MatrixXd unit = halton_points(settings.candidates, d, seed);
    std::vector<double> ei(static_cast<std::size_t>(settings.candidates));
    Eigen::Index best_var_index = 0;
    double best_var = -1.0;
    for (int i = 0; i < settings.candidates; ++i) {
        const Eigen::VectorXd x = bounds.denormalize(unit.row(i).transpose());
        ei[static_cast<std::size_t>(i)] = expected_improvement(surrogate, x, best);
        const double var = surrogate.predict(x).variance;
        if (var > best_var) {
            best_var = var;
            best_var_index = i;
        }
    }

    std::vector<int> idx(static_cast<std::size_t>(settings.candidates));
    for (int i = 0; i < settings.candidates; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return ei[static_cast<std::size_t>(a)] > ei[static_cast<std::size_t>(b)];
    });

    if (ei[static_cast<std::size_t>(idx.front())] <= 0.0) {
        // flat acquisition landscape: explore where the posterior is widest
        Proposal p;
        p.point = bounds.denormalize(unit.row(best_var_index).transpose());
        p.ei = 0.0;
        p.variance_fallback = true;
        return p;
    }

    const int top = std::min<int>(settings.refine_top, settings.candidates);
    const Eigen::VectorXd width = bounds.hi - bounds.lo;
    Eigen::VectorXd best_point;
    double best_ei = -1.0;
    for (int rank = 0; rank < top; ++rank) {
        Eigen::VectorXd x = bounds.denormalize(unit.row(idx[static_cast<std::size_t>(rank)]).transpose());
        double value = ei[static_cast<std::size_t>(idx[static_cast<std::size_t>(rank)])];
        for (const double step : settings.refine_steps) {
            for (Eigen::Index dim_i = 0; dim_i < d; ++dim_i) {
                for (const double sign : {1.0, -1.0}) {
                    Eigen::VectorXd trial = x;
                    trial(dim_i) = std::clamp(trial(dim_i) + sign * step * width(dim_i),
                                              bounds.lo(dim_i), bounds.hi(dim_i));
                    const double trial_ei = expected_improvement(surrogate, trial, best);
                    if (trial_ei > value) {
                        value = trial_ei;
                        x = trial;
                    }
                }
            }
        }
        if (value > best_ei) {
            best_ei = value;
            best_point = x;
        }
    }

    Proposal p;
    p.point = best_point;
    p.ei = best_ei;
    return p;
}

void TuneConfig::validate() const {
    if (n_init <= 0 || n_init >= n_iter) {
        throw ConfigError("tune config needs 0 < n_init < n_iter");
    }
    if (hyper_starts < 1) throw ConfigError("tune config needs hyper_starts >= 1");
    if (acquisition.candidates < 1) throw ConfigError("tune config needs candidates >= 1");
}

TuneConfig load_tune_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
    TuneConfig cfg;
    cfg.n_iter = j.value("n_iter", 100);
    cfg.n_init = j.value("n_init", 4);
    cfg.seed = j.value("seed", 1ULL);
    cfg.hyper_starts = j.value("hyper_starts", 32);
    if (j.contains("acquisition")) {
        const auto& a = j.at("acquisition");
        cfg.acquisition.candidates = a.value("candidates", 2048);
        cfg.acquisition.refine_top = a.value("refine_top", 8);
        if (a.contains("refine_steps")) {
            cfg.acquisition.refine_steps = a.at("refine_steps").get<std::vector<double>>();
        }
    }
    cfg.validate();
    return cfg;
}

TuneResult tune(const Objective& objective, const Box& bounds, const TuneConfig& config) {
    config.validate();
    bounds.validate();
    const Eigen::Index d = bounds.dim();

    TuneResult result;
    Eigen::MatrixXd points(config.n_iter, d);
    Eigen::VectorXd costs(config.n_iter);

    double worst_finite = -std::numeric_limits<double>::infinity();
    double incumbent = std::numeric_limits<double>::infinity();

    const auto evaluate = [&](int i, const Eigen::VectorXd& x) {
        TuneRecord rec;
        rec.iteration = i;
        rec.point = x;
        const std::optional<double> j = objective(x);
        if (j.has_value() && std::isfinite(*j)) {
            rec.cost = *j;
            worst_finite = std::max(worst_finite, rec.cost);
        } else {
            rec.diverged = true;
            rec.cost = std::isfinite(worst_finite) ? 10.0 * worst_finite : 1e9;
        }
        points.row(i) = x.transpose();
        costs(i) = rec.cost;
        incumbent = std::min(incumbent, rec.cost);
        rec.incumbent = incumbent;
        result.history.push_back(std::move(rec));
    };

    Rng init_rng(mix_seed(config.seed, 0x1517));
    for (int i = 0; i < config.n_init; ++i) {
        Eigen::VectorXd x(d);
        for (Eigen::Index k = 0; k < d; ++k) {
            x(k) = init_rng.uniform(bounds.lo(k), bounds.hi(k));
        }
        evaluate(i, x);
    }

    for (int i = config.n_init; i < config.n_iter; ++i) {
        const Surrogate surrogate =
            Surrogate::fit(points.topRows(i), costs.head(i), bounds,
                           mix_seed(config.seed, 0x10000 + static_cast<std::uint64_t>(i)),
                           config.hyper_starts);
        const Proposal prop =
            propose_next(surrogate, bounds,
                         mix_seed(config.seed, 0x20000 + static_cast<std::uint64_t>(i)),
                         config.acquisition);
        evaluate(i, prop.point);
    }

    int best_index = 0;
    for (int i = 1; i < config.n_iter; ++i) {
        if (costs(i) < costs(best_index)) best_index = i;  // earliest wins ties
    }
    result.best_point = points.row(best_index).transpose();
    result.best_cost = costs(best_index);
    result.best_iteration = best_index;
    return result;
}

void save_history_csv(const TuneResult& result,
                      const std::vector<std::string>& param_names,
                      const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write history file: " + path.string());
    out << "iteration";
    for (const auto& name : param_names) out << ',' << name;
    out << ",cost,incumbent,diverged\n";
    for (const auto& rec : result.history) {
        out << rec.iteration;
        for (Eigen::Index i = 0; i < rec.point.size(); ++i) {
            out << ',' << dataio::format_double(rec.point(i));
        }
        out << ',' << dataio::format_double(rec.cost) << ','
            << dataio::format_double(rec.incumbent) << ',' << (rec.diverged ? 1 : 0)
            << "\n";
    }
}

}  // namespace silo::tuner
