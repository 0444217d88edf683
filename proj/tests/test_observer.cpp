#include "silo/observer.hpp"

#include <cmath>
#include <fstream>

#include <doctest.h>

#include "silo/errors.hpp"
#include "silo/rng.hpp"
#include "silo/scenario.hpp"
#include "support.hpp"

using namespace silo;
using namespace silo::observer;
using silo::test::scratch_dir;
using silo::test::test_plant;
using silo::test::test_tires;
using silo::test::test_vehicle;

namespace {

dataio::ScenarioSpec short_maneuver(double duration = 6.0) {
    dataio::ScenarioSpec s;
    s.name = "short_maneuver";
    s.duration = duration;
    s.initial_speed = 22.0;
    s.steer.points = {{0.0, 0.0}, {1.0, 0.0}, {1.5, 0.04}, {3.0, -0.04}, {4.0, 0.0}};
    s.brake.points = {{0.0, 0.0}, {4.2, 0.0}, {4.5, 20.0}, {5.2, 0.0}};
    s.torque.points = {{0.0, 150.0}, {4.0, 150.0}, {4.2, 0.0}, {5.4, 120.0}};
    s.gear.points = {{0.0, 4}};
    return s;
}

dataio::Dataset twin_dataset(double duration = 6.0) {
    dataio::NoiseSpec noise;
    noise.channels["meas_ax"] = {0.05, 0.0};
    noise.channels["meas_ay"] = {0.05, 0.0};
    noise.channels["meas_yaw_rate"] = {0.005, 0.0};
    for (const char* c : {"fl", "fr", "rl", "rr"}) {
        noise.channels[std::string("meas_omega_") + c] = {0.05, 0.0};
    }
    return generate_dataset(short_maneuver(duration), test_plant(), noise, 21);
}

BenchmarkPredictor make_benchmark() {
    return BenchmarkPredictor(test_vehicle(), test_tires(), 0.01);
}

ObserverConfig default_config() {
    ObserverConfig cfg;
    cfg.gain = benchmark_gain_template();
    return cfg;
}

const Eigen::VectorXd kTable2 = [] {
    Eigen::VectorXd k(5);
    k << 0.0808, 0.1328, 0.9593, 98.42, -75.32;
    return k;
}();

}  // namespace

TEST_CASE("zero parameter vector assembles the zero gain") {
    auto pred = make_benchmark();
    const auto K = assemble_gain(benchmark_gain_template(), Eigen::VectorXd::Zero(5),
                                 pred.info());
    CHECK(K.rows() == 15);
    CHECK(K.cols() == 7);
    CHECK(K.isZero(0.0));
}

TEST_CASE("reference gain vector lands on the documented cells") {
    auto pred = make_benchmark();
    const auto K = assemble_gain(benchmark_gain_template(), kTable2, pred.info());

    // columns: ax, ay, yaw_rate, omega_fl..rr; rows: 7 states then 8 forces
    for (int col = 3; col < 7; ++col) CHECK(K(0, col) == 0.0808);  // vx row
    CHECK(K(2, 2) == 0.1328);                                      // yaw_rate row
    for (int c = 0; c < 4; ++c) CHECK(K(3 + c, 3 + c) == 0.9593);  // wheel diag
    for (int c = 0; c < 4; ++c) CHECK(K(7 + c, 0) == 98.42);       // fx rows, ax col
    CHECK(K(11, 2) == -75.32);  // fy_fl
    CHECK(K(12, 2) == -75.32);  // fy_fr
    CHECK(K(13, 2) == 75.32);   // fy_rl, sign reversed
    CHECK(K(14, 2) == 75.32);   // fy_rr, sign reversed

    int nonzeros = 0;
    for (Eigen::Index r = 0; r < K.rows(); ++r) {
        for (Eigen::Index c = 0; c < K.cols(); ++c) {
            if (K(r, c) != 0.0) ++nonzeros;
        }
    }
    CHECK(nonzeros == 17);  // 4 + 1 + 4 + 4 + 4
}

TEST_CASE("gain placement matches the template for random parameter vectors") {
    auto pred = make_benchmark();
    const auto tmpl = benchmark_gain_template();
    const auto& info = pred.info();
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd k(5);
        for (int i = 0; i < 5; ++i) k(i) = rng.uniform(-2.0, 2.0);
        const auto K = assemble_gain(tmpl, k, info);
        Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(15, 7);
        for (const auto& e : tmpl.entries) {
            const auto row = [&] {
                for (std::size_t i = 0; i < info.state_labels.size(); ++i) {
                    if (info.state_labels[i] == e.row) return static_cast<Eigen::Index>(i);
                }
                for (std::size_t i = 0; i < info.ext_labels.size(); ++i) {
                    if (info.ext_labels[i] == e.row) {
                        return static_cast<Eigen::Index>(7 + i);
                    }
                }
                return Eigen::Index{-1};
            }();
            const auto col = [&] {
                for (std::size_t i = 0; i < info.output_labels.size(); ++i) {
                    if (info.output_labels[i] == e.col) return static_cast<Eigen::Index>(i);
                }
                return Eigen::Index{-1};
            }();
            expected(row, col) = e.sign * k(tmpl.param_index(e.param));
        }
        CHECK(K == expected);
    }
}

TEST_CASE("unknown template labels are configuration errors") {
    auto pred = make_benchmark();
    GainTemplate t = benchmark_gain_template();
    t.entries.push_back({"not_a_channel", "ax", "k_fx_ax", 1.0});
    CHECK_THROWS_AS(assemble_gain(t, Eigen::VectorXd::Zero(5), pred.info()), ConfigError);
}

TEST_CASE("out-of-bounds parameters warn but do not fail") {
    auto pred = make_benchmark();
    Eigen::VectorXd k = Eigen::VectorXd::Zero(5);
    k(0) = 2.0;  // above the (0, 1) box
    std::vector<std::string> warnings;
    const auto K = assemble_gain(benchmark_gain_template(), k, pred.info(), &warnings);
    CHECK(K(0, 3) == 2.0);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("k_vx_omega") != std::string::npos);
}

TEST_CASE("template validation") {
    GainTemplate t = benchmark_gain_template();
    t.entries.push_back({"vx", "omega_fl", "k_vx_omega", 1.0});  // duplicate cell
    CHECK_THROWS_AS(t.validate(), ConfigError);

    GainTemplate unused = benchmark_gain_template();
    unused.param_names.push_back("k_orphan");
    Eigen::VectorXd lo(6), hi(6);
    lo << unused.lower, 0.0;
    hi << unused.upper, 1.0;
    unused.lower = lo;
    unused.upper = hi;
    CHECK_THROWS_AS(unused.validate(), ConfigError);

    GainTemplate bounds = benchmark_gain_template();
    bounds.upper(0) = bounds.lower(0);
    CHECK_THROWS_AS(bounds.validate(), ConfigError);
}

TEST_CASE("predict_step propagates the extended state unchanged") {
    auto pred = make_benchmark();
    const auto p = test_vehicle();
    Eigen::VectorXd x(7);
    x << 20.0, 0.0, 0.0, 62.5, 62.5, 62.5, 62.5;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(7);
    u(5) = 100.0;
    u(6) = 4.0;
    Eigen::VectorXd dz(8);
    for (int i = 0; i < 8; ++i) dz(i) = 10.0 * (i + 1);

    const Prediction out = predict_step(pred, x, u, dz);
    CHECK(out.x_aug.size() == 15);
    CHECK(out.x_aug.tail(8) == dz);
}

TEST_CASE("benchmark predictor with zero offsets equals the dynamics step") {
    auto pred = make_benchmark();
    const auto p = test_vehicle();
    const auto t = test_tires();
    dynamics::ChassisState s;
    s.vx = 24.0;
    s.vy = 0.2;
    s.yaw_rate = 0.12;
    for (int c = 0; c < 4; ++c) s.omega[c] = 24.0 / 0.32 * (1.0 + 0.01 * c);
    dynamics::DriverInputs u;
    u.steer = 0.03;
    u.brake = {2.0, 2.0, 2.0, 2.0};
    u.engine_torque = 120.0;
    u.gear = 5;

    Eigen::VectorXd xv(7);
    xv << s.vx, s.vy, s.yaw_rate, s.omega[0], s.omega[1], s.omega[2], s.omega[3];
    Eigen::VectorXd uv(7);
    uv << u.steer, u.brake[0], u.brake[1], u.brake[2], u.brake[3], u.engine_torque,
        static_cast<double>(u.gear);

    const auto step = pred.step(xv, uv, Eigen::VectorXd::Zero(8));
    const auto ref = dynamics::step_benchmark(s, u, p, t, 0.01);

    CHECK(step.x(0) == ref.state.vx);
    CHECK(step.x(1) == ref.state.vy);
    CHECK(step.x(2) == ref.state.yaw_rate);
    for (int c = 0; c < 4; ++c) CHECK(step.x(3 + c) == ref.state.omega[c]);
    CHECK(step.y(0) == ref.outputs.ax);
    CHECK(step.y(1) == ref.outputs.ay);
    for (int c = 0; c < 4; ++c) CHECK(step.z(c) == ref.forces.fx[c]);
    for (int c = 0; c < 4; ++c) CHECK(step.z(4 + c) == ref.forces.fy[c]);
}

TEST_CASE("correct_step identities and linearity") {
    Eigen::VectorXd x(3);
    x << 1.0, 2.0, 3.0;
    Eigen::VectorXd y(2), ypred(2);
    y << 0.5, -0.5;
    ypred << 0.25, 0.25;

    SUBCASE("zero gain") {
        const Eigen::MatrixXd K = Eigen::MatrixXd::Zero(3, 2);
        CHECK(correct_step(x, y, ypred, K) == x);
    }
    SUBCASE("zero innovation") {
        Eigen::MatrixXd K = Eigen::MatrixXd::Random(3, 2);
        CHECK(correct_step(x, y, y, K) == x);
    }
    SUBCASE("single entry moves a single component") {
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(3, 2);
        K(1, 0) = 2.0;
        const Eigen::VectorXd out = correct_step(x, y, ypred, K);
        CHECK(out(0) == x(0));
        CHECK(out(1) == doctest::Approx(x(1) + 2.0 * (y(0) - ypred(0))).epsilon(1e-15));
        CHECK(out(2) == x(2));
    }
    SUBCASE("correction is linear in the gain") {
        Rng rng(3);
        for (int i = 0; i < 100; ++i) {
            Eigen::MatrixXd K(3, 2);
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 2; ++c) K(r, c) = rng.uniform(-1.0, 1.0);
            }
            const double alpha = rng.uniform(-3.0, 3.0);
            const Eigen::VectorXd d1 = correct_step(x, y, ypred, K) - x;
            const Eigen::VectorXd d2 = correct_step(x, y, ypred, (alpha * K).eval()) - x;
            CHECK((d2 - alpha * d1).norm() <= 1e-12 * std::max(1.0, d1.norm()));
        }
    }
    SUBCASE("dimension mismatches are configuration errors") {
        const Eigen::MatrixXd K = Eigen::MatrixXd::Zero(4, 2);
        CHECK_THROWS_AS(correct_step(x, y, ypred, K), ConfigError);
        const Eigen::MatrixXd K2 = Eigen::MatrixXd::Zero(3, 3);
        CHECK_THROWS_AS(correct_step(x, y, ypred, K2), ConfigError);
    }
}

TEST_CASE("zero gain run equals the open-loop rollout bit-exactly") {
    const auto ds = twin_dataset();
    auto pred = make_benchmark();
    const auto cfg = default_config();

    const EstimateTrace closed = run_observer(ds, pred, cfg, Eigen::VectorXd::Zero(5));
    const EstimateTrace open = open_loop_rollout(ds, pred, cfg);

    REQUIRE(closed.rows() == ds.rows() - 1);
    REQUIRE(open.rows() == closed.rows());
    for (const auto& name : closed.order) {
        REQUIRE(open.has(name));
        CHECK(closed.at(name) == open.at(name));
    }
}

TEST_CASE("plant predictor on its own noise-free data reproduces the truth") {
    dataio::NoiseSpec no_noise;
    const auto ds = generate_dataset(short_maneuver(), test_plant(), no_noise, 4);
    PlantPredictor pred(test_plant(), 0.01);
    const auto cfg = default_config();

    const EstimateTrace tr = run_observer(ds, pred, cfg, Eigen::VectorXd::Zero(5));
    for (const auto& name : {"vx", "vy", "yaw_rate", "omega_fl", "omega_rr"}) {
        const auto& est = tr.at(name);
        const auto& truth = ds.at(name);
        for (std::size_t i = 0; i < est.size(); ++i) {
            const double scale = std::max(1.0, std::abs(truth[i + 1]));
            CHECK(std::abs(est[i] - truth[i + 1]) <= 1e-9 * scale);
        }
    }
}

TEST_CASE("extended states stay at their initial value without force rows") {
    const auto ds = twin_dataset();
    auto pred = make_benchmark();
    ObserverConfig cfg;
    cfg.gain.param_names = {"k_vx_omega"};
    cfg.gain.lower.resize(1);
    cfg.gain.upper.resize(1);
    cfg.gain.lower << 0.0;
    cfg.gain.upper << 1.0;
    for (const char* c : {"fl", "fr", "rl", "rr"}) {
        cfg.gain.entries.push_back({"vx", std::string("omega_") + c, "k_vx_omega", 1.0});
    }
    Eigen::VectorXd k(1);
    k << 0.1;
    const EstimateTrace closed = run_observer(ds, pred, cfg, k);

    // with all δz gain rows zero, ẑ must equal the raw predictor forces,
    // i.e. the innovation never leaks into the extended states
    auto pred2 = make_benchmark();
    Eigen::VectorXd x = initial_state(ds, pred2.info(), cfg);
    Eigen::VectorXd dz = Eigen::VectorXd::Zero(8);
    // replay manually and compare the force channels
    std::vector<double> fx_fl;
    {
        const auto& info = pred2.info();
        Eigen::VectorXd xh = x;
        const Eigen::MatrixXd K = assemble_gain(cfg.gain, k, info);
        for (std::size_t step = 1; step < ds.rows(); ++step) {
            Eigen::VectorXd u(7), y(7);
            int j = 0;
            for (const auto& l : info.input_labels) u(j++) = ds.at(l)[step - 1];
            j = 0;
            for (const auto& l : info.output_labels) y(j++) = ds.at("meas_" + l)[step];
            const auto s = pred2.step(xh, u, dz);
            Eigen::VectorXd aug(15);
            aug << s.x, dz;
            aug = correct_step(aug, y, s.y, K);
            xh = aug.head(7);
            CHECK(aug.tail(8).isZero(0.0));
            fx_fl.push_back(s.z(0));
        }
    }
    CHECK(closed.at("fx_fl") == fx_fl);
}

TEST_CASE("observer runs are deterministic") {
    const auto ds = twin_dataset();
    auto pred = make_benchmark();
    const auto cfg = default_config();
    Eigen::VectorXd k(5);
    k << 0.05, 0.2, 0.8, 40.0, -30.0;
    const EstimateTrace a = run_observer(ds, pred, cfg, k);
    const EstimateTrace b = run_observer(ds, pred, cfg, k);
    for (const auto& name : a.order) CHECK(a.at(name) == b.at(name));
}

TEST_CASE("diverging gains abort with the failing step index") {
    const auto ds = twin_dataset();
    auto pred = make_benchmark();
    const auto cfg = default_config();
    Eigen::VectorXd k(5);
    k << 0.0, 0.0, 0.0, -1e7, 0.0;  // sign-flipped force feedback explodes
    try {
        run_observer(ds, pred, cfg, k);
        FAIL("expected IntegrationError");
    } catch (const IntegrationError& e) {
        CHECK(e.step() > 0);
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("observer config file round trip") {
    const auto dir = scratch_dir("observer_config");
    {
        std::ofstream out(dir / "obs.json");
        out << R"({
  "predictor": "benchmark",
  "vehicle": "veh.json",
  "dt": 0.01,
  "initial_state": "dataset",
  "template": {
    "parameters": [
      {"name": "k_vx_omega", "lower": 0.0, "upper": 1.0},
      {"name": "k_fy_yaw", "lower": -100.0, "upper": 0.0}
    ],
    "entries": [
      {"row": "vx", "col": "omega_fl", "param": "k_vx_omega"},
      {"row": "fy_rl", "col": "yaw_rate", "param": "k_fy_yaw", "sign": -1}
    ]
  },
  "gains": {"k_vx_omega": 0.25}
})";
    }
    const ObserverConfig cfg = load_observer_config(dir / "obs.json");
    CHECK(cfg.predictor == "benchmark");
    CHECK(cfg.vehicle_config.filename() == "veh.json");
    CHECK(cfg.gain.param_names.size() == 2);
    CHECK(cfg.gain.entries.size() == 2);
    CHECK(cfg.gain.entries[1].sign == -1.0);
    const Eigen::VectorXd k = cfg.gains_vector();
    CHECK(k(0) == 0.25);
    CHECK(k(1) == 0.0);

    save_gains({{"k_vx_omega", 0.5}, {"k_fy_yaw", -75.0}}, dir / "gains.json");
    const auto g = load_gains(dir / "gains.json");
    CHECK(g.at("k_fy_yaw") == -75.0);
}

TEST_CASE("trace save/load round trip") {
    const auto dir = scratch_dir("trace_roundtrip");
    const auto ds = twin_dataset(2.0);
    auto pred = make_benchmark();
    const auto cfg = default_config();
    const EstimateTrace tr = run_observer(ds, pred, cfg, kTable2);
    save_trace(tr, dir / "trace.csv");
    const EstimateTrace back = load_trace(dir / "trace.csv");
    CHECK(back.first_step == tr.first_step);
    CHECK(back.order == tr.order);
    for (const auto& name : tr.order) CHECK(back.at(name) == tr.at(name));
}
