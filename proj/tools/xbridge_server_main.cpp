#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "silo/pipeline.hpp"
#include "silo/xbridge.hpp"

using namespace silo;

// Reference server: exposes an in-repo model over the step protocol so the
// observer can treat it as an external black-box predictor.
int main(int argc, char** argv) {
    CLI::App app{"silo xbridge server: serve a vehicle model over the step protocol"};
    std::string predictor = "benchmark";
    std::string vehicle;
    std::string listen;
    bool use_stdio = false;
    double dt = 0.01;
    app.add_option("--predictor", predictor, "benchmark | plant");
    app.add_option("--vehicle", vehicle, "vehicle parameter JSON")->required();
    app.add_option("--listen", listen, "tcp:port, tcp:host:port or unix:/path");
    app.add_flag("--stdio", use_stdio, "speak the protocol on stdin/stdout");
    app.add_option("--dt", dt, "model step length in seconds");
    CLI11_PARSE(app, argc, argv);

    if (use_stdio == listen.empty()) {
        std::fprintf(stderr, "error: pass exactly one of --listen or --stdio\n");
        return 1;
    }

    try {
        observer::ObserverConfig cfg;
        cfg.predictor = predictor;
        cfg.vehicle_config = vehicle;
        cfg.dt = dt;
        const auto model = harness::make_predictor(cfg);

        if (use_stdio) {
            xbridge::Stream stream(0, 1);
            xbridge::serve(*model, stream);
        } else {
            xbridge::Stream stream = xbridge::listen_once(listen);
            xbridge::serve(*model, stream);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
