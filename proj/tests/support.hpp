#pragma once

#include <filesystem>
#include <string>

#include "silo/dynamics.hpp"

namespace silo::test {

inline std::filesystem::path repo_dir() { return SILO_REPO_DIR; }

inline std::filesystem::path config_dir() { return repo_dir() / "configs"; }

// Scratch directory under the build tree, wiped per call site name.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::path(SILO_BUILD_DIR) / "test_scratch" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline dynamics::VehicleParams test_vehicle() {
    dynamics::VehicleParams p;
    p.mass = 1500.0;
    p.yaw_inertia = 2200.0;
    p.lf = 1.2;
    p.lr = 1.4;
    p.track = 1.6;
    p.wheel_radius = {0.32, 0.32, 0.32, 0.32};
    p.wheel_inertia = 1.2;
    p.brake_gain = 30.0;
    p.gear_ratio = {{1, 14.0}, {2, 10.0}, {3, 7.0}, {4, 5.4}, {5, 4.3}, {6, 3.6}};
    p.cg_height = 0.45;
    p.gravity = 9.81;
    p.substeps = 10;
    return p;
}

inline dynamics::TireCoeffs test_tires() {
    dynamics::TireCoeffs t;
    t.bx = 10.0;
    t.cx = 1.9;
    t.dx = 1.0;
    t.ex = 0.97;
    t.by = 9.0;
    t.cy = 1.6;
    t.dy = 0.9;
    t.ey = 0.98;
    t.eps_v = 0.5;
    return t;
}

inline dynamics::PlantParams test_plant() {
    dynamics::PlantParams p;
    p.vehicle = test_vehicle();
    p.tires = test_tires();
    p.extras.relaxation_length = 0.3;
    p.extras.load_filter_hz = 2.0;
    p.extras.friction_ellipse = true;
    return p;
}

inline dynamics::PlantParams degenerate_plant() {
    dynamics::PlantParams p = test_plant();
    p.extras.relaxation_length = 0.0;
    p.extras.load_filter_hz = 0.0;
    p.extras.friction_ellipse = false;
    return p;
}

}  // namespace silo::test
