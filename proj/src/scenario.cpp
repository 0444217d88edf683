#include "silo/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "silo/errors.hpp"
#include "silo/rng.hpp"

namespace silo::dataio {

using nlohmann::json;

double Profile::at(double t) const {
    if (points.empty()) return 0.0;
    if (t <= points.front().first) return points.front().second;
    if (t >= points.back().first) return points.back().second;
    const auto upper = std::upper_bound(
        points.begin(), points.end(), t,
        [](double value, const auto& p) { return value < p.first; });
    const auto lower = upper - 1;
    const double span = upper->first - lower->first;
    if (span <= 0.0) return lower->second;
    const double w = (t - lower->first) / span;
    return lower->second + w * (upper->second - lower->second);
}

int HoldProfile::at(double t) const {
    if (points.empty()) return 1;
    int value = points.front().second;
    for (const auto& [pt, pv] : points) {
        if (pt > t) break;
        value = pv;
    }
    return value;
}

void ScenarioSpec::validate() const {
    if (!(duration > 0.0)) throw ConfigError("scenario duration must be positive");
    if (!(dt > 0.0)) throw ConfigError("scenario dt must be positive");
    if (!(initial_speed >= 0.0)) throw ConfigError("scenario initial_speed must be >= 0");
    const auto check_sorted = [](const auto& pts, const char* name) {
        for (std::size_t i = 1; i < pts.size(); ++i) {
            if (pts[i].first < pts[i - 1].first) {
                throw ConfigError(std::string("scenario profile '") + name +
                                  "' must have ascending times");
            }
        }
    };
    check_sorted(steer.points, "steer");
    check_sorted(brake.points, "brake");
    check_sorted(torque.points, "torque");
    check_sorted(gear.points, "gear");
}

dynamics::DriverInputs ScenarioSpec::inputs_at(double t) const {
    dynamics::DriverInputs u;
    u.steer = steer.at(t);
    const double p = std::max(0.0, brake.at(t));
    u.brake = {p, p, p, p};
    u.engine_torque = torque.at(t);
    u.gear = gear.at(t);
    return u;
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

Profile parse_profile(const json& j, const char* key) {
    Profile p;
    if (!j.contains(key)) return p;
    for (const auto& pair : j.at(key)) {
        p.points.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
    }
    return p;
}

}  // namespace

ScenarioSpec load_scenario(const std::filesystem::path& path) {
    const json j = load_json(path);
    ScenarioSpec s;
    s.name = j.value("name", path.stem().string());
    s.duration = j.value("duration", 60.0);
    s.dt = j.value("dt", 0.01);
    s.initial_speed = j.value("initial_speed", 25.0);
    s.steer = parse_profile(j, "steer");
    s.brake = parse_profile(j, "brake");
    s.torque = parse_profile(j, "torque");
    if (j.contains("gear")) {
        for (const auto& pair : j.at("gear")) {
            s.gear.points.emplace_back(pair.at(0).get<double>(), pair.at(1).get<int>());
        }
    }
    s.validate();
    return s;
}

void NoiseSpec::validate() const {
    for (const auto& [name, ch] : channels) {
        if (!(ch.sigma >= 0.0)) {
            throw ConfigError("noise sigma must be >= 0 for channel '" + name + "'");
        }
    }
}

NoiseSpec load_noise(const std::filesystem::path& path) {
    const json j = load_json(path);
    NoiseSpec n;
    n.seed = j.value("seed", 0ULL);
    if (j.contains("channels")) {
        for (const auto& [name, spec] : j.at("channels").items()) {
            NoiseSpec::Channel ch;
            ch.sigma = spec.value("sigma", 0.0);
            ch.bias = spec.value("bias", 0.0);
            n.channels[name] = ch;
        }
    }
    n.validate();
    return n;
}

std::vector<double> add_noise(const std::vector<double>& clean, double sigma,
                              double bias, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw ConfigError("add_noise: sigma must be >= 0");
    std::vector<double> out = clean;
    if (sigma == 0.0 && bias == 0.0) return out;
    Rng rng(seed);
    for (double& v : out) v += bias + sigma * rng.gauss();
    return out;
}

dynamics::PlantState initial_plant_state(double initial_speed,
                                         const dynamics::VehicleParams& params) {
    dynamics::PlantState ps;
    ps.chassis.vx = initial_speed;
    for (int c = 0; c < 4; ++c) {
        ps.chassis.omega[c] = initial_speed / params.wheel_radius[c];
    }
    return ps;
}

Dataset generate_dataset(const ScenarioSpec& scenario,
                         const dynamics::PlantParams& plant,
                         const NoiseSpec& noise, std::uint64_t seed) {
    scenario.validate();
    noise.validate();
    plant.vehicle.validate();
    plant.tires.validate();

    const std::size_t n = static_cast<std::size_t>(std::llround(scenario.duration / scenario.dt)) + 1;
    dynamics::PlantState state = initial_plant_state(scenario.initial_speed, plant.vehicle);

    Dataset ds;
    ds.dt = scenario.dt;
    ds.add("t", {});
    for (const auto& group : {input_channels(), measurement_channels(),
                              truth_state_channels(), truth_force_channels()}) {
        for (const auto& name : group) ds.add(name, {});
    }
    // map nodes are stable, so plain pointers stay valid while we append
    const auto col = [&](const std::string& name) {
        auto& v = ds.channels.at(name);
        v.reserve(n);
        return &v;
    };
    auto* t_col = col("t");
    auto* steer_col = col("steer");
    std::array<std::vector<double>*, 4> brake_cols{};
    std::array<std::vector<double>*, 4> momega_cols{};
    std::array<std::vector<double>*, 4> omega_cols{};
    std::array<std::vector<double>*, 4> fx_cols{};
    std::array<std::vector<double>*, 4> fy_cols{};
    for (int c = 0; c < 4; ++c) {
        const std::string corner = dynamics::kCornerNames[c];
        brake_cols[c] = col("brake_" + corner);
        momega_cols[c] = col("meas_omega_" + corner);
        omega_cols[c] = col("omega_" + corner);
        fx_cols[c] = col("fx_" + corner);
        fy_cols[c] = col("fy_" + corner);
    }
    auto* torque_col = col("engine_torque");
    auto* gear_col = col("gear");
    auto* max_col = col("meas_ax");
    auto* may_col = col("meas_ay");
    auto* myaw_col = col("meas_yaw_rate");
    auto* vx_col = col("vx");
    auto* vy_col = col("vy");
    auto* yaw_col = col("yaw_rate");

    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * scenario.dt;
        const dynamics::DriverInputs u = scenario.inputs_at(t);

        dynamics::Evaluation eval;
        try {
            eval = dynamics::evaluate_plant(state, u, plant);
        } catch (const IntegrationError& e) {
            throw IntegrationError("plant diverged at t=" + format_double(t) + "s: " + e.what(),
                                   static_cast<long>(k));
        }

        t_col->push_back(t);
        steer_col->push_back(u.steer);
        for (int c = 0; c < 4; ++c) brake_cols[c]->push_back(u.brake[c]);
        torque_col->push_back(u.engine_torque);
        gear_col->push_back(static_cast<double>(u.gear));

        max_col->push_back(eval.ax);
        may_col->push_back(eval.ay);
        myaw_col->push_back(state.chassis.yaw_rate);
        for (int c = 0; c < 4; ++c) momega_cols[c]->push_back(state.chassis.omega[c]);

        vx_col->push_back(state.chassis.vx);
        vy_col->push_back(state.chassis.vy);
        yaw_col->push_back(state.chassis.yaw_rate);
        for (int c = 0; c < 4; ++c) omega_cols[c]->push_back(state.chassis.omega[c]);
        for (int c = 0; c < 4; ++c) fx_cols[c]->push_back(eval.raw.fx[c]);
        for (int c = 0; c < 4; ++c) fy_cols[c]->push_back(eval.raw.fy[c]);

        if (k + 1 < n) {
            try {
                state = dynamics::step_plant(state, u, plant, scenario.dt).state;
            } catch (const IntegrationError& e) {
                throw IntegrationError("plant diverged at t=" + format_double(t) +
                                       "s: " + e.what(), static_cast<long>(k));
            }
        }
    }

    // seeded sensor corruption, one independent stream per channel
    const std::uint64_t noise_base = noise.seed ? noise.seed : mix_seed(seed, 0x5EED);
    std::uint64_t channel_index = 0;
    for (const auto& name : measurement_channels()) {
        ++channel_index;
        const auto it = noise.channels.find(name);
        if (it == noise.channels.end()) continue;
        auto& values = ds.channels.at(name);
        values = add_noise(values, it->second.sigma, it->second.bias,
                           mix_seed(noise_base, channel_index));
    }

    ds.metadata["scenario"] = scenario.name;
    ds.metadata["seed"] = std::to_string(seed);
    ds.metadata["noise_seed"] = std::to_string(noise_base);
    ds.validate();
    return ds;
}

}  // namespace silo::dataio
