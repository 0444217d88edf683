#include "silo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "silo/dynamics.hpp"
#include "silo/errors.hpp"

namespace silo::harness {

namespace {

void check_lengths(const std::vector<double>& a, const std::vector<double>& b,
                   const char* who) {
    if (a.empty() || a.size() != b.size()) {
        throw DataError(std::string(who) + ": series lengths " + std::to_string(a.size()) +
                        " and " + std::to_string(b.size()) + " are unusable");
    }
}

}  // namespace

double rmse(const std::vector<double>& estimate, const std::vector<double>& truth) {
    check_lengths(estimate, truth, "rmse");
    double sum = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        const double e = estimate[i] - truth[i];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(estimate.size()));
}

double max_abs_error(const std::vector<double>& estimate,
                     const std::vector<double>& truth) {
    check_lengths(estimate, truth, "max_abs_error");
    double worst = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        worst = std::max(worst, std::abs(estimate[i] - truth[i]));
    }
    return worst;
}

const ChannelMetrics& RunReport::channel(const std::string& channel_name) const {
    for (const auto& c : channels) {
        if (c.channel == channel_name) return c;
    }
    throw DataError("report for '" + name + "' has no channel '" + channel_name + "'");
}

const std::vector<std::string>& report_channels() {
    static const std::vector<std::string> v = [] {
        std::vector<std::string> out{"vx", "beta"};
        for (const auto& f : dataio::truth_force_channels()) out.push_back(f);
        return out;
    }();
    return v;
}

std::vector<double> truth_channel(const dataio::Dataset& dataset,
                                  const std::string& channel, std::size_t first_step) {
    const std::size_t n = dataset.rows();
    if (first_step >= n) throw DataError("truth_channel: first_step beyond dataset");
    std::vector<double> out;
    out.reserve(n - first_step);
    if (channel == "beta") {
        const auto& vx = dataset.at("vx");
        const auto& vy = dataset.at("vy");
        for (std::size_t i = first_step; i < n; ++i) {
            out.push_back(dynamics::side_slip_angle(vy[i], vx[i]));
        }
        return out;
    }
    const auto& values = dataset.at(channel);
    out.assign(values.begin() + static_cast<std::ptrdiff_t>(first_step), values.end());
    return out;
}

std::vector<RunReport> compare_report(
    const std::vector<std::pair<std::string, const observer::EstimateTrace*>>& traces,
    const dataio::Dataset& dataset) {
    if (traces.empty()) throw DataError("compare_report: no traces given");

    std::vector<RunReport> reports;
    for (const auto& [name, trace] : traces) {
        if (trace->first_step + trace->rows() != dataset.rows()) {
            throw DataError("trace '" + name + "' does not cover the dataset horizon");
        }
        RunReport rep;
        rep.name = name;
        for (const auto& channel : report_channels()) {
            if (!trace->has(channel)) {
                throw DataError("trace '" + name + "' is missing channel '" + channel + "'");
            }
            const auto truth = truth_channel(dataset, channel, trace->first_step);
            ChannelMetrics m;
            m.channel = channel;
            m.rmse = rmse(trace->at(channel), truth);
            m.max_abs = max_abs_error(trace->at(channel), truth);
            rep.channels.push_back(std::move(m));
        }
        reports.push_back(std::move(rep));
    }

    // normalize against the worst contender per channel and metric
    for (std::size_t c = 0; c < report_channels().size(); ++c) {
        double worst_rmse = 0.0, worst_max = 0.0;
        for (const auto& rep : reports) {
            worst_rmse = std::max(worst_rmse, rep.channels[c].rmse);
            worst_max = std::max(worst_max, rep.channels[c].max_abs);
        }
        for (auto& rep : reports) {
            rep.channels[c].rmse_index =
                worst_rmse > 0.0 ? rep.channels[c].rmse / worst_rmse : 1.0;
            rep.channels[c].max_abs_index =
                worst_max > 0.0 ? rep.channels[c].max_abs / worst_max : 1.0;
        }
    }
    return reports;
}

void write_metrics_csv(const std::vector<RunReport>& reports,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write metrics file: " + path.string());
    out << "contender,channel,rmse,max_abs_error\n";
    for (const auto& rep : reports) {
        for (const auto& c : rep.channels) {
            out << rep.name << ',' << c.channel << ',' << dataio::format_double(c.rmse)
                << ',' << dataio::format_double(c.max_abs) << "\n";
        }
    }
}

void write_spider_csv(const std::vector<RunReport>& reports,
                      const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write spider file: " + path.string());
    out << "axis";
    for (const auto& rep : reports) out << ',' << rep.name;
    out << "\n";
    for (std::size_t c = 0; c < report_channels().size(); ++c) {
        out << report_channels()[c] << "_rmse";
        for (const auto& rep : reports) {
            out << ',' << dataio::format_double(rep.channels[c].rmse_index);
        }
        out << "\n";
    }
    for (std::size_t c = 0; c < report_channels().size(); ++c) {
        out << report_channels()[c] << "_max";
        for (const auto& rep : reports) {
            out << ',' << dataio::format_double(rep.channels[c].max_abs_index);
        }
        out << "\n";
    }
}

std::string summary_table(const std::vector<RunReport>& reports) {
    std::ostringstream out;
    out << std::left << std::setw(10) << "channel";
    for (const auto& rep : reports) {
        out << std::right << std::setw(14) << (rep.name + " rmse") << std::setw(14)
            << (rep.name + " max");
    }
    out << "\n";
    for (std::size_t c = 0; c < report_channels().size(); ++c) {
        out << std::left << std::setw(10) << report_channels()[c];
        for (const auto& rep : reports) {
            out << std::right << std::setw(14) << std::setprecision(5) << std::scientific
                << rep.channels[c].rmse << std::setw(14) << rep.channels[c].max_abs;
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace silo::harness
