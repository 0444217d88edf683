#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "silo/dataset.hpp"
#include "silo/dynamics.hpp"

namespace silo::dataio {

// Piecewise-linear profile over time, clamped at both ends.
struct Profile {
    std::vector<std::pair<double, double>> points;  // (t, value), t ascending
    double at(double t) const;
};

// Previous-value hold, for the gear schedule.
struct HoldProfile {
    std::vector<std::pair<double, int>> points;
    int at(double t) const;
};

// A scripted maneuver: driver input profiles plus duration and entry speed.
struct ScenarioSpec {
    std::string name;
    double duration = 60.0;      // s
    double dt = 0.01;            // s, sample period of the generated dataset
    double initial_speed = 25.0; // m/s
    Profile steer;   // rad
    Profile brake;   // bar, applied to all four corners
    Profile torque;  // N m
    HoldProfile gear;

    void validate() const;
    dynamics::DriverInputs inputs_at(double t) const;
};

ScenarioSpec load_scenario(const std::filesystem::path& path);

// Per-measurement-channel sensor corruption.
struct NoiseSpec {
    struct Channel {
        double sigma = 0.0;  // standard deviation
        double bias = 0.0;   // constant offset
    };
    std::uint64_t seed = 0;  // 0 derives the stream from the generation seed
    std::map<std::string, Channel> channels;

    void validate() const;
};

NoiseSpec load_noise(const std::filesystem::path& path);

// bias + seeded zero-mean Gaussian noise of std sigma.
std::vector<double> add_noise(const std::vector<double>& clean, double sigma,
                              double bias, std::uint64_t seed);

// Rolls the plant over the scenario script and records clean ground truth
// (states and per-corner planar forces) plus noise-corrupted measurements.
// Fully deterministic for a fixed (seed, noise.seed) pair.
Dataset generate_dataset(const ScenarioSpec& scenario,
                         const dynamics::PlantParams& plant,
                         const NoiseSpec& noise, std::uint64_t seed);

// The documented initial condition shared by the generator and the
// estimation side: entry speed, synchronous free-rolling wheels, all other
// states (including plant lags and filters) zero.
dynamics::PlantState initial_plant_state(double initial_speed,
                                         const dynamics::VehicleParams& params);

}  // namespace silo::dataio
