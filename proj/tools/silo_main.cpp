#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "silo/errors.hpp"
#include "silo/pipeline.hpp"

using namespace silo;

namespace {

harness::Contender parse_contender(const std::string& spec) {
    // name=observer.json[:gains.json]
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("contender spec must look like name=observer.json[:gains.json], got '" +
                          spec + "'");
    }
    harness::Contender c;
    c.name = spec.substr(0, eq);
    std::string rest = spec.substr(eq + 1);
    const std::size_t colon = rest.find(':');
    if (colon != std::string::npos) {
        c.gains = rest.substr(colon + 1);
        rest = rest.substr(0, colon);
    }
    c.observer_config = rest;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"silo: simulator-in-the-loop vehicle state estimation"};
    app.require_subcommand(1);

    // generate
    auto* generate = app.add_subcommand("generate", "roll the plant over a scenario and write a dataset");
    harness::GenerateOptions gen;
    generate->add_option("--scenario", gen.scenario, "scenario JSON")->required();
    generate->add_option("--vehicle", gen.vehicle, "plant vehicle JSON")->required();
    generate->add_option("--noise", gen.noise, "noise spec JSON (omit for clean data)");
    generate->add_option("--seed", gen.seed, "generation seed");
    generate->add_option("--out", gen.out_dir, "output directory")->required();

    // tune
    auto* tune = app.add_subcommand("tune", "calibrate the observer gains on a training dataset");
    harness::TuneOptions tun;
    std::uint64_t tune_seed = 0;
    bool tune_seed_set = false;
    tune->add_option("--dataset", tun.dataset, "training dataset CSV")->required();
    tune->add_option("--observer-config", tun.observer_config, "observer JSON")->required();
    tune->add_option("--tune-config", tun.tune_config, "tuner JSON")->required();
    tune->add_option("--seed", tune_seed, "override the tuner seed")
        ->each([&](const std::string&) { tune_seed_set = true; });
    tune->add_option("--predictor", tun.predictor_override,
                     "override the predictor (benchmark|plant|extern:<address>)");
    tune->add_option("--out", tun.out_dir, "output directory")->required();

    // estimate
    auto* estimate = app.add_subcommand("estimate", "run the observer over a dataset and write the trace");
    harness::EstimateOptions est;
    estimate->add_option("--dataset", est.dataset, "dataset CSV")->required();
    estimate->add_option("--observer-config", est.observer_config, "observer JSON")->required();
    estimate->add_option("--gains", est.gains, "gains fragment from a tune run");
    estimate->add_option("--predictor", est.predictor_override, "override the predictor");
    estimate->add_option("--out", est.out_dir, "output directory")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "run the observer and report RMSE / max error vs ground truth");
    harness::EvaluateOptions eva;
    evaluate->add_option("--dataset", eva.dataset, "dataset CSV with ground truth")->required();
    evaluate->add_option("--observer-config", eva.observer_config, "observer JSON")->required();
    evaluate->add_option("--gains", eva.gains, "gains fragment from a tune run");
    evaluate->add_option("--predictor", eva.predictor_override, "override the predictor");
    evaluate->add_option("--out", eva.out_dir, "output directory")->required();

    // compare
    auto* compare = app.add_subcommand("compare", "run several observer setups and emit comparison reports");
    harness::CompareOptions cmp;
    std::vector<std::string> contender_specs;
    compare->add_option("--dataset", cmp.dataset, "dataset CSV with ground truth")->required();
    compare->add_option("--contender", contender_specs,
                        "name=observer.json[:gains.json] (repeatable)")
        ->required();
    compare->add_option("--out", cmp.out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*generate) {
            const auto out = harness::stage_generate(gen);
            std::printf("dataset written to %s\n", out.c_str());
        } else if (*tune) {
            if (tune_seed_set) tun.seed = tune_seed;
            const auto out = harness::stage_tune(tun);
            std::printf("best cost %.6g at evaluation %d\noptimum written to %s\n",
                        out.result.best_cost, out.result.best_iteration,
                        out.optimum.c_str());
        } else if (*estimate) {
            const auto out = harness::stage_estimate(est);
            std::printf("trace written to %s\n", out.c_str());
        } else if (*evaluate) {
            const auto out = harness::stage_evaluate(eva);
            std::printf("report written to %s\n", out.summary.c_str());
        } else if (*compare) {
            for (const auto& spec : contender_specs) {
                cmp.contenders.push_back(parse_contender(spec));
            }
            const auto out = harness::stage_compare(cmp);
            std::printf("comparison written to %s\n", out.summary.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
