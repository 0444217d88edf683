#include "silo/vehicle.hpp"

#include <fstream>

#include <json.hpp>

#include "silo/errors.hpp"

namespace silo::dynamics {

using nlohmann::json;

namespace {

void require_positive(double value, const char* name) {
    if (!(value > 0.0)) {
        throw ConfigError(std::string("vehicle parameter must be positive: ") + name);
    }
}

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

double get_num(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw ConfigError("missing or non-numeric key '" + std::string(key) + "' in " + ctx);
    }
    return j.at(key).get<double>();
}

}  // namespace

void VehicleParams::validate() const {
    require_positive(mass, "mass");
    require_positive(yaw_inertia, "yaw_inertia");
    require_positive(lf, "lf");
    require_positive(lr, "lr");
    require_positive(track, "track");
    for (double r : wheel_radius) require_positive(r, "wheel_radius");
    require_positive(wheel_inertia, "wheel_inertia");
    require_positive(brake_gain, "brake_gain");
    require_positive(cg_height, "cg_height");
    require_positive(gravity, "gravity");
    if (substeps < 1) throw ConfigError("substeps must be >= 1");
    if (gear_ratio.empty()) throw ConfigError("gear_ratio table must not be empty");
    for (const auto& [gear, ratio] : gear_ratio) {
        if (!(ratio > 0.0)) {
            throw ConfigError("gear_ratio entries must be positive (gear " +
                              std::to_string(gear) + ")");
        }
    }
}

void TireCoeffs::validate() const {
    require_positive(bx, "bx");
    require_positive(cx, "cx");
    require_positive(dx, "dx");
    require_positive(by, "by");
    require_positive(cy, "cy");
    require_positive(dy, "dy");
    require_positive(eps_v, "eps_v");
}

VehicleConfig load_vehicle_config(const std::filesystem::path& path) {
    const json j = load_json(path);
    const std::string ctx = path.string();
    if (!j.contains("vehicle") || !j.contains("tires")) {
        throw ConfigError("vehicle config needs 'vehicle' and 'tires' sections: " + ctx);
    }

    VehicleConfig out;
    const json& v = j.at("vehicle");
    out.vehicle.mass = get_num(v, "mass", ctx);
    out.vehicle.yaw_inertia = get_num(v, "yaw_inertia", ctx);
    out.vehicle.lf = get_num(v, "lf", ctx);
    out.vehicle.lr = get_num(v, "lr", ctx);
    out.vehicle.track = get_num(v, "track", ctx);
    out.vehicle.wheel_inertia = get_num(v, "wheel_inertia", ctx);
    out.vehicle.brake_gain = get_num(v, "brake_gain", ctx);
    out.vehicle.cg_height = get_num(v, "cg_height", ctx);
    out.vehicle.gravity = get_num(v, "gravity", ctx);
    if (v.contains("substeps")) out.vehicle.substeps = v.at("substeps").get<int>();
    if (!v.contains("wheel_radius")) {
        throw ConfigError("missing 'wheel_radius' in " + ctx);
    }
    const json& wr = v.at("wheel_radius");
    if (wr.is_number()) {
        out.vehicle.wheel_radius.fill(wr.get<double>());
    } else if (wr.is_array() && wr.size() == 4) {
        for (int c = 0; c < 4; ++c) out.vehicle.wheel_radius[c] = wr.at(c).get<double>();
    } else {
        throw ConfigError("'wheel_radius' must be a number or a 4-array in " + ctx);
    }
    if (!v.contains("gear_ratio") || !v.at("gear_ratio").is_object()) {
        throw ConfigError("missing 'gear_ratio' table in " + ctx);
    }
    for (const auto& [key, val] : v.at("gear_ratio").items()) {
        try {
            out.vehicle.gear_ratio[std::stoi(key)] = val.get<double>();
        } catch (const std::exception&) {
            throw ConfigError("gear_ratio keys must be integers in " + ctx);
        }
    }

    const json& t = j.at("tires");
    out.tires.bx = get_num(t, "bx", ctx);
    out.tires.cx = get_num(t, "cx", ctx);
    out.tires.dx = get_num(t, "dx", ctx);
    out.tires.ex = get_num(t, "ex", ctx);
    out.tires.by = get_num(t, "by", ctx);
    out.tires.cy = get_num(t, "cy", ctx);
    out.tires.dy = get_num(t, "dy", ctx);
    out.tires.ey = get_num(t, "ey", ctx);
    out.tires.eps_v = get_num(t, "eps_v", ctx);

    if (j.contains("plant")) {
        const json& p = j.at("plant");
        out.extras.relaxation_length = get_num(p, "relaxation_length", ctx);
        out.extras.load_filter_hz = get_num(p, "load_filter_hz", ctx);
        out.extras.friction_ellipse = p.value("friction_ellipse", true);
    }

    out.vehicle.validate();
    out.tires.validate();
    return out;
}

void save_vehicle_config(const VehicleConfig& config, const std::filesystem::path& path) {
    json v;
    v["mass"] = config.vehicle.mass;
    v["yaw_inertia"] = config.vehicle.yaw_inertia;
    v["lf"] = config.vehicle.lf;
    v["lr"] = config.vehicle.lr;
    v["track"] = config.vehicle.track;
    v["wheel_radius"] = config.vehicle.wheel_radius;
    v["wheel_inertia"] = config.vehicle.wheel_inertia;
    v["brake_gain"] = config.vehicle.brake_gain;
    v["cg_height"] = config.vehicle.cg_height;
    v["gravity"] = config.vehicle.gravity;
    v["substeps"] = config.vehicle.substeps;
    json gears = json::object();
    for (const auto& [gear, ratio] : config.vehicle.gear_ratio) {
        gears[std::to_string(gear)] = ratio;
    }
    v["gear_ratio"] = gears;

    json t;
    t["bx"] = config.tires.bx;
    t["cx"] = config.tires.cx;
    t["dx"] = config.tires.dx;
    t["ex"] = config.tires.ex;
    t["by"] = config.tires.by;
    t["cy"] = config.tires.cy;
    t["dy"] = config.tires.dy;
    t["ey"] = config.tires.ey;
    t["eps_v"] = config.tires.eps_v;

    json j;
    j["vehicle"] = v;
    j["tires"] = t;
    j["plant"] = {{"relaxation_length", config.extras.relaxation_length},
                  {"load_filter_hz", config.extras.load_filter_hz},
                  {"friction_ellipse", config.extras.friction_ellipse}};

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace silo::dynamics
