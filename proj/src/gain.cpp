#include "silo/gain.hpp"

#include <algorithm>
#include <set>

#include "silo/dataset.hpp"
#include "silo/errors.hpp"

namespace silo::observer {

Eigen::Index GainTemplate::param_index(const std::string& name) const {
    const auto it = std::find(param_names.begin(), param_names.end(), name);
    if (it == param_names.end()) {
        throw ConfigError("gain template has no parameter '" + name + "'");
    }
    return static_cast<Eigen::Index>(it - param_names.begin());
}

void GainTemplate::validate() const {
    if (param_names.empty()) throw ConfigError("gain template has no parameters");
    if (lower.size() != param_count() || upper.size() != param_count()) {
        throw ConfigError("gain template bounds must match the parameter count");
    }
    for (Eigen::Index i = 0; i < param_count(); ++i) {
        if (!(lower(i) < upper(i))) {
            throw ConfigError("gain bounds must satisfy lower < upper for '" +
                              param_names[i] + "'");
        }
    }
    std::set<std::pair<std::string, std::string>> seen;
    std::set<std::string> used;
    for (const auto& e : entries) {
        if (!seen.emplace(e.row, e.col).second) {
            throw ConfigError("gain template repeats cell (" + e.row + ", " + e.col + ")");
        }
        if (e.sign != 1.0 && e.sign != -1.0) {
            throw ConfigError("gain entry sign must be +1 or -1 for (" + e.row + ", " +
                              e.col + ")");
        }
        param_index(e.param);
        used.insert(e.param);
    }
    for (const auto& name : param_names) {
        if (!used.count(name)) {
            throw ConfigError("gain parameter '" + name + "' is not used by any entry");
        }
    }
}

GainTemplate benchmark_gain_template() {
    GainTemplate t;
    t.param_names = {"k_vx_omega", "k_yaw_yaw", "k_omega_omega", "k_fx_ax", "k_fy_yaw"};
    t.lower.resize(5);
    t.upper.resize(5);
    t.lower << 0.0, 0.0, 0.0, 0.0, -100.0;
    t.upper << 1.0, 1.0, 1.0, 100.0, 0.0;

    const auto corners = {"fl", "fr", "rl", "rr"};
    for (const std::string c : corners) {
        t.entries.push_back({"vx", "omega_" + c, "k_vx_omega", 1.0});
    }
    t.entries.push_back({"yaw_rate", "yaw_rate", "k_yaw_yaw", 1.0});
    for (const std::string c : corners) {
        t.entries.push_back({"omega_" + c, "omega_" + c, "k_omega_omega", 1.0});
    }
    for (const std::string c : corners) {
        t.entries.push_back({"fx_" + c, "ax", "k_fx_ax", 1.0});
    }
    t.entries.push_back({"fy_fl", "yaw_rate", "k_fy_yaw", 1.0});
    t.entries.push_back({"fy_fr", "yaw_rate", "k_fy_yaw", 1.0});
    t.entries.push_back({"fy_rl", "yaw_rate", "k_fy_yaw", -1.0});
    t.entries.push_back({"fy_rr", "yaw_rate", "k_fy_yaw", -1.0});
    return t;
}

Eigen::MatrixXd assemble_gain(const GainTemplate& tmpl, const Eigen::VectorXd& ktilde,
                              const PredictorInfo& info,
                              std::vector<std::string>* warnings) {
    tmpl.validate();
    if (ktilde.size() != tmpl.param_count()) {
        throw ConfigError("gain vector has " + std::to_string(ktilde.size()) +
                          " entries, template expects " +
                          std::to_string(tmpl.param_count()));
    }
    if (warnings) {
        for (Eigen::Index i = 0; i < tmpl.param_count(); ++i) {
            if (ktilde(i) < tmpl.lower(i) || ktilde(i) > tmpl.upper(i)) {
                warnings->push_back("parameter '" + tmpl.param_names[i] + "' value " +
                                    std::to_string(ktilde(i)) + " outside bounds");
            }
        }
    }

    const auto row_index = [&](const std::string& label) -> Eigen::Index {
        const auto& states = info.state_labels;
        const auto s = std::find(states.begin(), states.end(), label);
        if (s != states.end()) return static_cast<Eigen::Index>(s - states.begin());
        const auto& ext = info.ext_labels;
        const auto e = std::find(ext.begin(), ext.end(), label);
        if (e != ext.end()) {
            return info.state_dim() + static_cast<Eigen::Index>(e - ext.begin());
        }
        throw ConfigError("gain row channel '" + label + "' is neither a state nor an extended label of predictor '" +
                          info.id + "'");
    };
    const auto col_index = [&](const std::string& label) -> Eigen::Index {
        const auto& outs = info.output_labels;
        const auto o = std::find(outs.begin(), outs.end(), label);
        if (o == outs.end()) {
            throw ConfigError("gain column channel '" + label +
                              "' is not an output label of predictor '" + info.id + "'");
        }
        return static_cast<Eigen::Index>(o - outs.begin());
    };

    Eigen::MatrixXd gain = Eigen::MatrixXd::Zero(info.augmented_dim(), info.output_dim());
    for (const auto& e : tmpl.entries) {
        gain(row_index(e.row), col_index(e.col)) = e.sign * ktilde(tmpl.param_index(e.param));
    }
    return gain;
}

}  // namespace silo::observer
