#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace silo::dataio {

// Canonical channel-name groups of the CSV schema (see docs/dataset_schema.md).
const std::vector<std::string>& input_channels();
const std::vector<std::string>& measurement_channels();
const std::vector<std::string>& truth_state_channels();
const std::vector<std::string>& truth_force_channels();

// Time-indexed named channels over one common grid. Unknown channels are
// carried verbatim so foreign columns survive a round trip.
struct Dataset {
    double dt = 0.01;
    std::vector<std::string> order;  // column order; "t" first when present
    std::unordered_map<std::string, std::vector<double>> channels;
    std::map<std::string, std::string> metadata;

    std::size_t rows() const;
    bool has(const std::string& name) const { return channels.count(name) != 0; }
    const std::vector<double>& at(const std::string& name) const;
    void add(const std::string& name, std::vector<double> values);

    void validate() const;  // equal channel lengths, dt > 0, non-empty

    // Role checks: training needs inputs, measurements and ground truth;
    // estimation only inputs and measurements. Errors name the first
    // missing channel.
    void require_training() const;
    void require_estimation() const;
};

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Shortest round-trip decimal form, shared by all CSV writers.
std::string format_double(double value);

}  // namespace silo::dataio
