#include "silo/pipeline.hpp"

#include <fstream>

#include "silo/errors.hpp"
#include "silo/xbridge.hpp"

namespace silo::harness {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string());
}

void copy_config(const fs::path& source, const fs::path& out_dir) {
    if (source.empty()) return;
    fs::copy_file(source, out_dir / source.filename(),
                  fs::copy_options::overwrite_existing);
}

observer::ObserverConfig load_observer(const fs::path& path,
                                       const std::string& predictor_override) {
    observer::ObserverConfig cfg = observer::load_observer_config(path);
    if (!predictor_override.empty()) cfg.predictor = predictor_override;
    return cfg;
}

Eigen::VectorXd resolve_gains(observer::ObserverConfig* cfg, const fs::path& gains_path) {
    if (!gains_path.empty()) {
        cfg->gains = observer::load_gains(gains_path);
    }
    return cfg->gains_vector();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

}  // namespace

std::unique_ptr<observer::Predictor> make_predictor(const observer::ObserverConfig& config) {
    if (config.predictor == "benchmark" || config.predictor == "plant") {
        if (config.vehicle_config.empty()) {
            throw ConfigError("predictor '" + config.predictor +
                              "' needs a vehicle parameter file");
        }
        const dynamics::VehicleConfig v = dynamics::load_vehicle_config(config.vehicle_config);
        if (config.predictor == "benchmark") {
            return std::make_unique<observer::BenchmarkPredictor>(v.vehicle, v.tires,
                                                                  config.dt);
        }
        dynamics::PlantParams p{v.vehicle, v.tires, v.extras};
        return std::make_unique<observer::PlantPredictor>(p, config.dt);
    }
    if (config.predictor.rfind("extern:", 0) == 0) {
        return xbridge::connect_predictor(config.predictor.substr(7),
                                          config.extern_timeout_s);
    }
    throw ConfigError("unknown predictor '" + config.predictor +
                      "' (benchmark | plant | extern:<address>)");
}

std::filesystem::path stage_generate(const GenerateOptions& options) {
    ensure_dir(options.out_dir);
    const dataio::ScenarioSpec scenario = dataio::load_scenario(options.scenario);
    const dynamics::VehicleConfig v = dynamics::load_vehicle_config(options.vehicle);
    dataio::NoiseSpec noise;
    if (!options.noise.empty()) noise = dataio::load_noise(options.noise);

    const dynamics::PlantParams plant{v.vehicle, v.tires, v.extras};
    const dataio::Dataset ds =
        dataio::generate_dataset(scenario, plant, noise, options.seed);

    const fs::path out = options.out_dir / "dataset.csv";
    dataio::save_dataset(ds, out);
    copy_config(options.scenario, options.out_dir);
    copy_config(options.vehicle, options.out_dir);
    copy_config(options.noise, options.out_dir);
    return out;
}

TuneStageResult stage_tune(const TuneOptions& options) {
    ensure_dir(options.out_dir);
    const dataio::Dataset ds = dataio::load_dataset(options.dataset);
    observer::ObserverConfig cfg = load_observer(options.observer_config,
                                                 options.predictor_override);
    tuner::TuneConfig tune_cfg = tuner::load_tune_config(options.tune_config);
    if (options.seed.has_value()) tune_cfg.seed = *options.seed;

    const auto predictor = make_predictor(cfg);
    const tuner::CostSpec spec = tuner::default_cost_spec(ds);

    TuneStageResult out;
    out.result = tuner::tune_observer(ds, *predictor, cfg, spec, tune_cfg);

    std::map<std::string, double> gains;
    for (Eigen::Index i = 0; i < cfg.gain.param_count(); ++i) {
        gains[cfg.gain.param_names[static_cast<std::size_t>(i)]] = out.result.best_point(i);
    }
    out.optimum = options.out_dir / "optimum.json";
    observer::save_gains(gains, out.optimum);
    out.history = options.out_dir / "history.csv";
    tuner::save_history_csv(out.result, cfg.gain.param_names, out.history);

    std::string summary = "best cost " + dataio::format_double(out.result.best_cost) +
                          " at evaluation " + std::to_string(out.result.best_iteration) +
                          "\n";
    for (Eigen::Index i = 0; i < cfg.gain.param_count(); ++i) {
        summary += cfg.gain.param_names[static_cast<std::size_t>(i)] + " = " +
                   dataio::format_double(out.result.best_point(i)) + "\n";
    }
    write_text(options.out_dir / "tune_summary.txt", summary);

    copy_config(options.observer_config, options.out_dir);
    copy_config(options.tune_config, options.out_dir);
    return out;
}

std::filesystem::path stage_estimate(const EstimateOptions& options) {
    ensure_dir(options.out_dir);
    const dataio::Dataset ds = dataio::load_dataset(options.dataset);
    observer::ObserverConfig cfg = load_observer(options.observer_config,
                                                 options.predictor_override);
    const Eigen::VectorXd k = resolve_gains(&cfg, options.gains);
    const auto predictor = make_predictor(cfg);

    const observer::EstimateTrace trace = observer::run_observer(ds, *predictor, cfg, k);
    const fs::path out = options.out_dir / "trace.csv";
    observer::save_trace(trace, out);
    copy_config(options.observer_config, options.out_dir);
    copy_config(options.gains, options.out_dir);
    return out;
}

EvaluateStageResult stage_evaluate(const EvaluateOptions& options) {
    ensure_dir(options.out_dir);
    const dataio::Dataset ds = dataio::load_dataset(options.dataset);
    observer::ObserverConfig cfg = load_observer(options.observer_config,
                                                 options.predictor_override);
    const Eigen::VectorXd k = resolve_gains(&cfg, options.gains);
    const auto predictor = make_predictor(cfg);

    const observer::EstimateTrace trace = observer::run_observer(ds, *predictor, cfg, k);

    EvaluateStageResult out;
    out.trace = options.out_dir / "trace.csv";
    observer::save_trace(trace, out.trace);
    out.reports = compare_report({{cfg.predictor, &trace}}, ds);
    out.metrics = options.out_dir / "metrics.csv";
    write_metrics_csv(out.reports, out.metrics);
    out.summary = options.out_dir / "report.txt";
    write_text(out.summary, summary_table(out.reports));
    copy_config(options.observer_config, options.out_dir);
    copy_config(options.gains, options.out_dir);
    return out;
}

CompareStageResult stage_compare(const CompareOptions& options) {
    ensure_dir(options.out_dir);
    if (options.contenders.empty()) throw ConfigError("compare needs contenders");
    const dataio::Dataset ds = dataio::load_dataset(options.dataset);

    std::vector<observer::EstimateTrace> traces;
    traces.reserve(options.contenders.size());
    for (const auto& contender : options.contenders) {
        observer::ObserverConfig cfg = load_observer(contender.observer_config,
                                                     contender.predictor_override);
        const Eigen::VectorXd k = resolve_gains(&cfg, contender.gains);
        const auto predictor = make_predictor(cfg);
        traces.push_back(observer::run_observer(ds, *predictor, cfg, k));
        observer::save_trace(traces.back(),
                             options.out_dir / ("trace_" + contender.name + ".csv"));
    }

    std::vector<std::pair<std::string, const observer::EstimateTrace*>> named;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        named.emplace_back(options.contenders[i].name, &traces[i]);
    }

    CompareStageResult out;
    out.reports = compare_report(named, ds);
    out.metrics = options.out_dir / "metrics.csv";
    write_metrics_csv(out.reports, out.metrics);
    out.spider = options.out_dir / "spider.csv";
    write_spider_csv(out.reports, out.spider);
    out.summary = options.out_dir / "summary.txt";
    write_text(out.summary, summary_table(out.reports));
    for (const auto& contender : options.contenders) {
        copy_config(contender.observer_config, options.out_dir);
        copy_config(contender.gains, options.out_dir);
    }
    return out;
}

}  // namespace silo::harness
