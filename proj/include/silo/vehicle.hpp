#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>

namespace silo::dynamics {

enum Corner { kFL = 0, kFR = 1, kRL = 2, kRR = 3 };

inline constexpr std::array<const char*, 4> kCornerNames{"fl", "fr", "rl", "rr"};

// One value per wheel, ordered fl, fr, rl, rr.
using Corners = std::array<double, 4>;

// Physical constants of a vehicle (plant or benchmark parameterization).
struct VehicleParams {
    double mass = 1500.0;         // kg
    double yaw_inertia = 2200.0;  // kg m^2
    double lf = 1.2;              // m, CG to front axle
    double lr = 1.4;              // m, CG to rear axle
    double track = 1.6;           // m, average track width
    Corners wheel_radius{0.32, 0.32, 0.32, 0.32};  // m
    double wheel_inertia = 1.2;   // kg m^2, spin inertia per wheel
    double brake_gain = 30.0;     // N m per bar of brake pressure
    std::map<int, double> gear_ratio;  // engaged gear -> total ratio
    double cg_height = 0.45;      // m, used by the load-transfer model
    double gravity = 9.81;        // m/s^2
    int substeps = 10;            // internal Euler substeps per model step

    void validate() const;  // throws ConfigError on violated invariants
};

// Magic-formula coefficients, one set per axis, plus the low-speed guard
// used in the slip denominators.
struct TireCoeffs {
    double bx = 10.0, cx = 1.9, dx = 1.0, ex = 0.97;
    double by = 9.0, cy = 1.6, dy = 0.9, ey = 0.98;
    double eps_v = 0.5;  // m/s

    void validate() const;
};

// Extra effects of the higher-fidelity plant model. Zero/false values
// switch each effect off and degrade the plant to the benchmark model.
struct PlantExtras {
    double relaxation_length = 0.3;  // m, first-order tire force lag; 0 = off
    double load_filter_hz = 2.0;     // load-transfer low-pass; <= 0 = off
    bool friction_ellipse = true;
};

// One vehicle configuration file: parameters, tire curves and (optionally)
// the plant-only extras.
struct VehicleConfig {
    VehicleParams vehicle;
    TireCoeffs tires;
    PlantExtras extras;
};

VehicleConfig load_vehicle_config(const std::filesystem::path& path);
void save_vehicle_config(const VehicleConfig& config, const std::filesystem::path& path);

}  // namespace silo::dynamics
