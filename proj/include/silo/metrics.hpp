#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "silo/dataset.hpp"
#include "silo/observer.hpp"

namespace silo::harness {

// sqrt(mean squared error). Lengths must match and be >= 1.
double rmse(const std::vector<double>& estimate, const std::vector<double>& truth);

double max_abs_error(const std::vector<double>& estimate,
                     const std::vector<double>& truth);

struct ChannelMetrics {
    std::string channel;
    double rmse = 0.0;
    double max_abs = 0.0;
    // metric divided by the worst contender's metric (worst = 1)
    double rmse_index = 1.0;
    double max_abs_index = 1.0;
};

struct RunReport {
    std::string name;
    std::vector<ChannelMetrics> channels;
    const ChannelMetrics& channel(const std::string& name) const;
};

// Channels evaluated by the standard comparison: longitudinal speed,
// side-slip angle and the eight planar forces.
const std::vector<std::string>& report_channels();

// Ground-truth series aligned with a trace starting at `first_step`;
// "beta" derives from the vx/vy channels.
std::vector<double> truth_channel(const dataio::Dataset& dataset,
                                  const std::string& channel, std::size_t first_step);

// Both metrics for every report channel and contender, plus normalized
// indices against the worst contender per channel/metric.
std::vector<RunReport> compare_report(
    const std::vector<std::pair<std::string, const observer::EstimateTrace*>>& traces,
    const dataio::Dataset& dataset);

void write_metrics_csv(const std::vector<RunReport>& reports,
                       const std::filesystem::path& path);
void write_spider_csv(const std::vector<RunReport>& reports,
                      const std::filesystem::path& path);
std::string summary_table(const std::vector<RunReport>& reports);

}  // namespace silo::harness
