#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "silo/cost.hpp"
#include "silo/metrics.hpp"
#include "silo/observer.hpp"
#include "silo/scenario.hpp"

namespace silo::harness {

// Builds the predictor named by the config: "benchmark", "plant" or
// "extern:<address>".
std::unique_ptr<observer::Predictor> make_predictor(const observer::ObserverConfig& config);

// Every stage writes its outputs into `out_dir` and copies the resolved
// input configs next to them, so a run directory reproduces itself.

struct GenerateOptions {
    std::filesystem::path scenario;
    std::filesystem::path vehicle;
    std::filesystem::path noise;  // empty: no sensor corruption
    std::uint64_t seed = 1;
    std::filesystem::path out_dir;
};
std::filesystem::path stage_generate(const GenerateOptions& options);

struct TuneOptions {
    std::filesystem::path dataset;
    std::filesystem::path observer_config;
    std::filesystem::path tune_config;
    std::optional<std::uint64_t> seed;     // overrides the tune config seed
    std::string predictor_override;        // overrides the observer config predictor
    std::filesystem::path out_dir;
};
struct TuneStageResult {
    tuner::TuneResult result;
    std::filesystem::path optimum;  // gains fragment
    std::filesystem::path history;
};
TuneStageResult stage_tune(const TuneOptions& options);

struct EstimateOptions {
    std::filesystem::path dataset;
    std::filesystem::path observer_config;
    std::filesystem::path gains;  // optional gains fragment; empty uses config gains
    std::string predictor_override;
    std::filesystem::path out_dir;
};
std::filesystem::path stage_estimate(const EstimateOptions& options);

struct EvaluateOptions {
    std::filesystem::path dataset;
    std::filesystem::path observer_config;
    std::filesystem::path gains;
    std::string predictor_override;
    std::filesystem::path out_dir;
};
struct EvaluateStageResult {
    std::filesystem::path trace;
    std::filesystem::path metrics;
    std::filesystem::path summary;
    std::vector<RunReport> reports;
};
EvaluateStageResult stage_evaluate(const EvaluateOptions& options);

struct Contender {
    std::string name;
    std::filesystem::path observer_config;
    std::filesystem::path gains;  // optional
    std::string predictor_override;
};
struct CompareOptions {
    std::filesystem::path dataset;
    std::vector<Contender> contenders;
    std::filesystem::path out_dir;
};
struct CompareStageResult {
    std::filesystem::path metrics;
    std::filesystem::path spider;
    std::filesystem::path summary;
    std::vector<RunReport> reports;
};
CompareStageResult stage_compare(const CompareOptions& options);

}  // namespace silo::harness
