#include "silo/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "silo/errors.hpp"

namespace silo::dataio {

namespace {

std::vector<std::string> with_corners(const std::string& stem) {
    return {stem + "_fl", stem + "_fr", stem + "_rl", stem + "_rr"};
}

std::vector<std::string> concat(std::initializer_list<std::vector<std::string>> parts) {
    std::vector<std::string> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

}  // namespace

const std::vector<std::string>& input_channels() {
    static const std::vector<std::string> v = concat(
        {{"steer"}, with_corners("brake"), {"engine_torque", "gear"}});
    return v;
}

const std::vector<std::string>& measurement_channels() {
    static const std::vector<std::string> v = concat(
        {{"meas_ax", "meas_ay", "meas_yaw_rate"}, with_corners("meas_omega")});
    return v;
}

const std::vector<std::string>& truth_state_channels() {
    static const std::vector<std::string> v =
        concat({{"vx", "vy", "yaw_rate"}, with_corners("omega")});
    return v;
}

const std::vector<std::string>& truth_force_channels() {
    static const std::vector<std::string> v =
        concat({with_corners("fx"), with_corners("fy")});
    return v;
}

std::size_t Dataset::rows() const {
    if (order.empty()) return 0;
    const auto it = channels.find(order.front());
    return it == channels.end() ? 0 : it->second.size();
}

const std::vector<double>& Dataset::at(const std::string& name) const {
    const auto it = channels.find(name);
    if (it == channels.end()) throw DataError("dataset has no channel '" + name + "'");
    return it->second;
}

void Dataset::add(const std::string& name, std::vector<double> values) {
    if (channels.count(name)) throw DataError("duplicate channel '" + name + "'");
    order.push_back(name);
    channels.emplace(name, std::move(values));
}

void Dataset::validate() const {
    if (!(dt > 0.0)) throw DataError("dataset dt must be positive");
    if (order.empty()) throw DataError("empty dataset (no channels)");
    const std::size_t n = rows();
    if (n == 0) throw DataError("empty dataset (no rows)");
    for (const auto& name : order) {
        if (at(name).size() != n) {
            throw DataError("channel '" + name + "' length " +
                            std::to_string(at(name).size()) + " != " + std::to_string(n));
        }
    }
}

void Dataset::require_estimation() const {
    validate();
    for (const auto& group : {input_channels(), measurement_channels()}) {
        for (const auto& name : group) {
            if (!has(name)) throw DataError("estimation dataset missing channel '" + name + "'");
        }
    }
}

void Dataset::require_training() const {
    require_estimation();
    for (const auto& group : {truth_state_channels(), truth_force_channels()}) {
        for (const auto& name : group) {
            if (!has(name)) throw DataError("training dataset missing channel '" + name + "'");
        }
    }
}

std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    dataset.validate();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write dataset file: " + path.string());
    out << "# silo dataset\n";
    out << "# dt: " << format_double(dataset.dt) << "\n";
    for (const auto& [key, value] : dataset.metadata) {
        if (key == "dt") continue;
        out << "# " << key << ": " << value << "\n";
    }
    for (std::size_t i = 0; i < dataset.order.size(); ++i) {
        out << (i ? "," : "") << dataset.order[i];
    }
    out << "\n";
    const std::size_t n = dataset.rows();
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < dataset.order.size(); ++i) {
            if (i) out << ',';
            out << format_double(dataset.channels.at(dataset.order[i])[r]);
        }
        out << "\n";
    }
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path.string());

    Dataset ds;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    std::vector<std::vector<double>> columns;

    const auto split = [](const std::string& s) {
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = s.find(',', start);
            fields.push_back(s.substr(start, pos - start));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        return fields;
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const std::size_t colon = line.find(':');
            if (colon != std::string::npos) {
                std::string key = line.substr(1, colon - 1);
                std::string value = line.substr(colon + 1);
                const auto trim = [](std::string& s) {
                    while (!s.empty() && s.front() == ' ') s.erase(s.begin());
                    while (!s.empty() && s.back() == ' ') s.pop_back();
                };
                trim(key);
                trim(value);
                if (!key.empty()) ds.metadata[key] = value;
            }
            continue;
        }
        if (!have_header) {
            ds.order = split(line);
            if (ds.order.empty()) throw DataError(path.string() + ": empty header row");
            columns.resize(ds.order.size());
            have_header = true;
            continue;
        }
        const auto fields = split(line);
        if (fields.size() != ds.order.size()) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(ds.order.size()) + " fields, got " +
                            std::to_string(fields.size()));
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            double value = 0.0;
            const char* begin = fields[i].data();
            const char* end = begin + fields[i].size();
            const auto res = std::from_chars(begin, end, value);
            if (res.ec != std::errc() || res.ptr != end) {
                throw DataError(path.string() + ":" + std::to_string(lineno) +
                                ": malformed number '" + fields[i] + "'");
            }
            columns[i].push_back(value);
        }
    }
    if (!have_header) throw DataError(path.string() + ": no header row");
    if (columns.empty() || columns.front().empty()) {
        throw DataError(path.string() + ": empty dataset (header only)");
    }
    for (std::size_t i = 0; i < ds.order.size(); ++i) {
        if (ds.channels.count(ds.order[i])) {
            throw DataError(path.string() + ": duplicate column '" + ds.order[i] + "'");
        }
        ds.channels.emplace(ds.order[i], std::move(columns[i]));
    }
    const auto dt_it = ds.metadata.find("dt");
    if (dt_it == ds.metadata.end()) throw DataError(path.string() + ": missing '# dt:' metadata");
    try {
        ds.dt = std::stod(dt_it->second);
    } catch (const std::exception&) {
        throw DataError(path.string() + ": malformed dt metadata '" + dt_it->second + "'");
    }
    ds.validate();
    return ds;
}

}  // namespace silo::dataio
