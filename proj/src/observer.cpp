#include "silo/observer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "silo/errors.hpp"

namespace silo::observer {

using nlohmann::json;

Eigen::VectorXd ObserverConfig::gains_vector() const {
    Eigen::VectorXd k = Eigen::VectorXd::Zero(gain.param_count());
    for (const auto& [name, value] : gains) {
        k(gain.param_index(name)) = value;
    }
    return k;
}

namespace {

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

GainTemplate parse_template(const json& j) {
    GainTemplate t;
    for (const auto& p : j.at("parameters")) {
        t.param_names.push_back(p.at("name").get<std::string>());
    }
    t.lower.resize(t.param_count());
    t.upper.resize(t.param_count());
    Eigen::Index i = 0;
    for (const auto& p : j.at("parameters")) {
        t.lower(i) = p.at("lower").get<double>();
        t.upper(i) = p.at("upper").get<double>();
        ++i;
    }
    for (const auto& e : j.at("entries")) {
        GainEntry entry;
        entry.row = e.at("row").get<std::string>();
        entry.col = e.at("col").get<std::string>();
        entry.param = e.at("param").get<std::string>();
        entry.sign = e.value("sign", 1.0);
        t.entries.push_back(std::move(entry));
    }
    t.validate();
    return t;
}

}  // namespace

ObserverConfig load_observer_config(const std::filesystem::path& path) {
    const json j = load_json(path);
    ObserverConfig cfg;
    cfg.predictor = j.value("predictor", "benchmark");
    cfg.dt = j.value("dt", 0.01);
    cfg.initial_state = j.value("initial_state", "dataset");
    cfg.extern_timeout_s = j.value("extern_timeout_s", 5.0);
    if (j.contains("vehicle")) {
        const std::filesystem::path v = j.at("vehicle").get<std::string>();
        cfg.vehicle_config = v.is_absolute() ? v : path.parent_path() / v;
    }
    if (j.contains("template")) {
        cfg.gain = parse_template(j.at("template"));
    } else {
        cfg.gain = benchmark_gain_template();
    }
    if (j.contains("gains")) {
        for (const auto& [name, value] : j.at("gains").items()) {
            cfg.gain.param_index(name);  // unknown names are configuration errors
            cfg.gains[name] = value.get<double>();
        }
    }
    if (!(cfg.dt > 0.0)) throw ConfigError("observer dt must be positive");
    if (cfg.initial_state != "dataset" && cfg.initial_state != "zero") {
        throw ConfigError("initial_state must be 'dataset' or 'zero'");
    }
    return cfg;
}

std::map<std::string, double> load_gains(const std::filesystem::path& path) {
    const json j = load_json(path);
    std::map<std::string, double> out;
    for (const auto& [name, value] : j.at("gains").items()) {
        out[name] = value.get<double>();
    }
    return out;
}

void save_gains(const std::map<std::string, double>& gains,
                const std::filesystem::path& path) {
    json g = json::object();
    for (const auto& [name, value] : gains) g[name] = value;
    json j;
    j["gains"] = g;
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write gains file: " + path.string());
    out << j.dump(2) << "\n";
}

std::size_t EstimateTrace::rows() const {
    if (order.empty()) return 0;
    const auto it = channels.find(order.front());
    return it == channels.end() ? 0 : it->second.size();
}

const std::vector<double>& EstimateTrace::at(const std::string& name) const {
    const auto it = channels.find(name);
    if (it == channels.end()) throw DataError("trace has no channel '" + name + "'");
    return it->second;
}

void save_trace(const EstimateTrace& trace, const std::filesystem::path& path) {
    dataio::Dataset ds;
    ds.dt = trace.dt;
    ds.metadata["first_step"] = std::to_string(trace.first_step);
    ds.metadata["kind"] = "estimate_trace";
    std::vector<double> t(trace.rows());
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<double>(trace.first_step + i) * trace.dt;
    }
    ds.add("t", std::move(t));
    for (const auto& name : trace.order) ds.add(name, trace.at(name));
    dataio::save_dataset(ds, path);
}

EstimateTrace load_trace(const std::filesystem::path& path) {
    const dataio::Dataset ds = dataio::load_dataset(path);
    EstimateTrace tr;
    tr.dt = ds.dt;
    const auto it = ds.metadata.find("first_step");
    tr.first_step = it == ds.metadata.end() ? 1 : std::stoul(it->second);
    for (const auto& name : ds.order) {
        if (name == "t") continue;
        tr.order.push_back(name);
        tr.channels.emplace(name, ds.at(name));
    }
    return tr;
}

Prediction predict_step(Predictor& predictor, const Eigen::VectorXd& x_prev,
                        const Eigen::VectorXd& u_prev, const Eigen::VectorXd& dz_prev) {
    const Predictor::Step s = predictor.step(x_prev, u_prev, dz_prev);
    const PredictorInfo& info = predictor.info();
    if (s.x.size() != info.state_dim() || s.y.size() != info.output_dim() ||
        s.z.size() != info.ext_dim()) {
        throw ConfigError("predictor '" + info.id +
                          "' returned vectors inconsistent with its declared dimensions");
    }
    Prediction p;
    p.x_aug.resize(info.augmented_dim());
    p.x_aug.head(info.state_dim()) = s.x;
    p.x_aug.tail(info.ext_dim()) = dz_prev;  // constant extended-state dynamics
    p.y = s.y;
    p.z = s.z;
    return p;
}

Eigen::VectorXd correct_step(const Eigen::VectorXd& x_aug_pred,
                             const Eigen::VectorXd& y_meas,
                             const Eigen::VectorXd& y_pred,
                             const Eigen::MatrixXd& gain) {
    if (y_meas.size() != y_pred.size()) {
        throw ConfigError("correct_step: measured and predicted outputs differ in size");
    }
    if (gain.rows() != x_aug_pred.size() || gain.cols() != y_meas.size()) {
        throw ConfigError("correct_step: gain is " + std::to_string(gain.rows()) + "x" +
                          std::to_string(gain.cols()) + ", expected " +
                          std::to_string(x_aug_pred.size()) + "x" +
                          std::to_string(y_meas.size()));
    }
    return x_aug_pred + gain * (y_meas - y_pred);
}

Eigen::VectorXd initial_state(const dataio::Dataset& dataset, const PredictorInfo& info,
                              const ObserverConfig& config) {
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(info.state_dim());
    if (config.initial_state == "zero") return x0;
    for (Eigen::Index i = 0; i < info.state_dim(); ++i) {
        const auto& label = info.state_labels[static_cast<std::size_t>(i)];
        if (dataset.has(label)) x0(i) = dataset.at(label).front();
    }
    return x0;
}

namespace {

struct RunBuffers {
    std::vector<Eigen::VectorXd> u;  // inputs per dataset row
    std::vector<Eigen::VectorXd> y;  // measurements per dataset row
};

RunBuffers gather_io(const dataio::Dataset& dataset, const PredictorInfo& info) {
    dataset.require_estimation();
    const std::size_t n = dataset.rows();
    RunBuffers buf;
    buf.u.assign(n, Eigen::VectorXd(info.input_dim()));
    buf.y.assign(n, Eigen::VectorXd(info.output_dim()));
    for (Eigen::Index j = 0; j < info.input_dim(); ++j) {
        const auto& col = dataset.at(info.input_labels[static_cast<std::size_t>(j)]);
        for (std::size_t k = 0; k < n; ++k) buf.u[k](j) = col[k];
    }
    for (Eigen::Index j = 0; j < info.output_dim(); ++j) {
        const auto& col =
            dataset.at("meas_" + info.output_labels[static_cast<std::size_t>(j)]);
        for (std::size_t k = 0; k < n; ++k) buf.y[k](j) = col[k];
    }
    return buf;
}

class TraceBuilder {
public:
    TraceBuilder(const PredictorInfo& info, double dt, std::size_t rows) : info_(info) {
        trace_.dt = dt;
        trace_.first_step = 1;
        const auto add = [&](const std::string& name) {
            trace_.order.push_back(name);
            auto& v = trace_.channels[name];
            v.reserve(rows);
            return &v;
        };
        for (const auto& l : info.state_labels) states_.push_back(add(l));
        const auto& sl = info.state_labels;
        has_beta_ = std::find(sl.begin(), sl.end(), "vx") != sl.end() &&
                    std::find(sl.begin(), sl.end(), "vy") != sl.end();
        if (has_beta_) {
            vx_index_ = std::find(sl.begin(), sl.end(), "vx") - sl.begin();
            vy_index_ = std::find(sl.begin(), sl.end(), "vy") - sl.begin();
            beta_ = add("beta");
        }
        for (const auto& l : info.ext_labels) ext_.push_back(add(l));
        for (const auto& l : info.output_labels) pred_.push_back(add("pred_" + l));
        for (const auto& l : info.output_labels) innov_.push_back(add("innov_" + l));
    }

    void push(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& z_hat,
              const Eigen::VectorXd& y_pred, const Eigen::VectorXd& innovation) {
        for (Eigen::Index i = 0; i < x_hat.size(); ++i) {
            states_[static_cast<std::size_t>(i)]->push_back(x_hat(i));
        }
        if (has_beta_) {
            beta_->push_back(dynamics::side_slip_angle(x_hat(vy_index_), x_hat(vx_index_)));
        }
        for (Eigen::Index i = 0; i < z_hat.size(); ++i) {
            ext_[static_cast<std::size_t>(i)]->push_back(z_hat(i));
        }
        for (Eigen::Index i = 0; i < y_pred.size(); ++i) {
            pred_[static_cast<std::size_t>(i)]->push_back(y_pred(i));
        }
        for (Eigen::Index i = 0; i < innovation.size(); ++i) {
            innov_[static_cast<std::size_t>(i)]->push_back(innovation(i));
        }
    }

    EstimateTrace take() { return std::move(trace_); }

private:
    const PredictorInfo& info_;
    EstimateTrace trace_;
    std::vector<std::vector<double>*> states_, ext_, pred_, innov_;
    std::vector<double>* beta_ = nullptr;
    bool has_beta_ = false;
    Eigen::Index vx_index_ = 0, vy_index_ = 0;
};

void check_run_finite(const Eigen::VectorXd& x, const PredictorInfo& info,
                      std::size_t step) {
    if (x.allFinite()) return;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x(i))) {
            throw IntegrationError(
                "observer diverged at step " + std::to_string(step) + " (channel " +
                    info.state_labels[static_cast<std::size_t>(i)] + ")",
                static_cast<long>(step));
        }
    }
}

}  // namespace

EstimateTrace run_observer(const dataio::Dataset& dataset, Predictor& predictor,
                           const ObserverConfig& config, const Eigen::VectorXd& ktilde) {
    const PredictorInfo& info = predictor.info();
    const RunBuffers buf = gather_io(dataset, info);
    const Eigen::MatrixXd gain = assemble_gain(config.gain, ktilde, info);
    const std::size_t n = dataset.rows();
    if (n < 2) throw DataError("dataset too short for an observer run");

    Eigen::VectorXd x_hat = initial_state(dataset, info, config);
    Eigen::VectorXd dz_hat = Eigen::VectorXd::Zero(info.ext_dim());

    TraceBuilder builder(info, dataset.dt, n - 1);
    for (std::size_t k = 1; k < n; ++k) {
        Prediction pred;
        try {
            pred = predict_step(predictor, x_hat, buf.u[k - 1], dz_hat);
        } catch (const IntegrationError& e) {
            throw IntegrationError("observer diverged at step " + std::to_string(k) +
                                       ": " + e.what(),
                                   static_cast<long>(k));
        } catch (const DomainError& e) {
            throw IntegrationError("observer diverged at step " + std::to_string(k) +
                                       ": " + e.what(),
                                   static_cast<long>(k));
        }
        check_run_finite(pred.x_aug.head(info.state_dim()), info, k);

        const Eigen::VectorXd innovation = buf.y[k] - pred.y;
        const Eigen::VectorXd x_aug = correct_step(pred.x_aug, buf.y[k], pred.y, gain);
        check_run_finite(x_aug.head(info.state_dim()), info, k);

        x_hat = x_aug.head(info.state_dim());
        dz_hat = x_aug.tail(info.ext_dim());
        const Eigen::VectorXd z_hat = pred.z + dz_hat;  // corrected extended values
        builder.push(x_hat, z_hat, pred.y, innovation);
    }
    return builder.take();
}

EstimateTrace open_loop_rollout(const dataio::Dataset& dataset, Predictor& predictor,
                                const ObserverConfig& config) {
    const PredictorInfo& info = predictor.info();
    const RunBuffers buf = gather_io(dataset, info);
    const std::size_t n = dataset.rows();
    if (n < 2) throw DataError("dataset too short for a rollout");

    Eigen::VectorXd x = initial_state(dataset, info, config);
    const Eigen::VectorXd dz = Eigen::VectorXd::Zero(info.ext_dim());

    TraceBuilder builder(info, dataset.dt, n - 1);
    for (std::size_t k = 1; k < n; ++k) {
        Predictor::Step s;
        try {
            s = predictor.step(x, buf.u[k - 1], dz);
        } catch (const IntegrationError& e) {
            throw IntegrationError("rollout diverged at step " + std::to_string(k) +
                                       ": " + e.what(),
                                   static_cast<long>(k));
        }
        check_run_finite(s.x, info, k);
        x = s.x;
        builder.push(x, s.z, s.y, buf.y[k] - s.y);
    }
    return builder.take();
}

}  // namespace silo::observer
