#include <cmath>
#include <fstream>

#include <doctest.h>

#include "silo/bayesopt.hpp"
#include "silo/cost.hpp"
#include "silo/errors.hpp"
#include "silo/rng.hpp"
#include "silo/scenario.hpp"
#include "support.hpp"

using namespace silo;
using namespace silo::tuner;
using silo::test::test_plant;
using silo::test::test_tires;
using silo::test::test_vehicle;

namespace {

Box unit_box(Eigen::Index d) {
    Box b;
    b.lo = Eigen::VectorXd::Zero(d);
    b.hi = Eigen::VectorXd::Ones(d);
    return b;
}

Surrogate two_point_surrogate() {
    Eigen::MatrixXd x(2, 1);
    x << 0.2, 0.8;
    Eigen::VectorXd y(2);
    y << 1.0, 3.0;
    GpHyper h;
    h.signal_var = 1.0;
    h.length_scales = Eigen::VectorXd::Constant(1, 0.3);
    h.noise = 1e-8;
    return Surrogate::fit_with_hyper(x, y, unit_box(1), h);
}

// deterministic smooth test function on the unit box
double bowl(const Eigen::VectorXd& x) {
    double v = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        v += (x(i) - 0.3) * (x(i) - 0.3) + 0.1 * std::sin(8.0 * x(i));
    }
    return v;
}

double scaled_branin(const Eigen::VectorXd& x) {
    const double pi = 3.14159265358979323846;
    const double a = 1.0, b = 5.1 / (4 * pi * pi), c = 5.0 / pi;
    const double r = 6.0, s = 10.0, t = 1.0 / (8 * pi);
    const double f = a * std::pow(x(1) - b * x(0) * x(0) + c * x(0) - r, 2) +
                     s * (1 - t) * std::cos(x(0)) + s;
    return 1.0 + f / 10.0;
}

Box branin_box() {
    Box b;
    b.lo.resize(2);
    b.hi.resize(2);
    b.lo << -5.0, 0.0;
    b.hi << 10.0, 15.0;
    return b;
}

}  // namespace

TEST_CASE("default weights") {
    dataio::Dataset ds;
    ds.dt = 0.01;
    ds.add("t", std::vector<double>(100, 0.0));
    ds.add("unit", [] {
        std::vector<double> v(100, 0.0);
        v[0] = 1.0;
        return v;
    }());
    ds.add("constant2", std::vector<double>(100, 2.0));
    ds.add("zero", std::vector<double>(100, 0.0));

    SUBCASE("unit-norm channel gets weight 1") {
        const auto w = default_weights(ds, {"unit"});
        CHECK(w(0) == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("constant channel of 2 over 100 samples gets 1/20") {
        const auto w = default_weights(ds, {"constant2"});
        CHECK(w(0) == doctest::Approx(0.05).epsilon(1e-15));
    }
    SUBCASE("zero-norm channel is a configuration error naming the channel") {
        try {
            default_weights(ds, {"zero"});
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("zero") != std::string::npos);
        }
    }
}

TEST_CASE("default weights over a generated 15-channel set") {
    dataio::ScenarioSpec s;
    s.duration = 4.0;
    s.initial_speed = 20.0;
    s.steer.points = {{0.0, 0.0}, {1.0, 0.05}, {3.0, -0.05}};
    s.torque.points = {{0.0, 200.0}};
    s.gear.points = {{0.0, 4}};
    const auto ds = generate_dataset(s, test_plant(), dataio::NoiseSpec{}, 5);

    std::vector<std::string> channels = dataio::truth_state_channels();
    for (const auto& f : dataio::truth_force_channels()) channels.push_back(f);
    const auto w = default_weights(ds, channels);

    for (std::size_t i = 0; i < channels.size(); ++i) {
        const auto& v = ds.at(channels[i]);
        double sum = 0.0;
        for (double x : v) sum += x * x;
        CHECK(w(static_cast<Eigen::Index>(i)) ==
              doctest::Approx(1.0 / std::sqrt(sum)).epsilon(1e-14));
    }
}

TEST_CASE("trace cost arithmetic") {
    dataio::Dataset ds;
    ds.dt = 0.01;
    ds.add("t", {0.0, 0.01, 0.02, 0.03, 0.04});
    ds.add("c", {1.0, 1.0, 1.0, 1.0, 1.0});

    observer::EstimateTrace tr;
    tr.dt = 0.01;
    tr.first_step = 1;
    tr.order = {"c"};
    tr.channels["c"] = {0.0, 0.0, 0.0, 0.0};  // error of one over four samples

    CostSpec spec;
    spec.state_terms = {{"c", 1.0}};
    CHECK(trace_cost(tr, ds, spec) == doctest::Approx(2.0).epsilon(1e-15));

    SUBCASE("identical estimates cost zero") {
        tr.channels["c"] = {1.0, 1.0, 1.0, 1.0};
        CHECK(trace_cost(tr, ds, spec) == 0.0);
    }
}

TEST_CASE("perfect twin has zero state cost") {
    dataio::ScenarioSpec s;
    s.duration = 3.0;
    s.initial_speed = 20.0;
    s.steer.points = {{0.0, 0.0}, {1.0, 0.03}};
    s.torque.points = {{0.0, 150.0}};
    s.gear.points = {{0.0, 4}};
    const auto ds = generate_dataset(s, test_plant(), dataio::NoiseSpec{}, 6);

    observer::PlantPredictor pred(test_plant(), 0.01);
    observer::ObserverConfig cfg;
    cfg.gain = observer::benchmark_gain_template();

    CostSpec spec;
    for (const auto& c : dataio::truth_state_channels()) spec.state_terms.emplace_back(c, 1.0);
    CHECK(cost(Eigen::VectorXd::Zero(5), ds, pred, cfg, spec) == 0.0);
}

TEST_CASE("diverged runs return the penalty and set diagnostics") {
    dataio::ScenarioSpec s;
    s.duration = 2.0;
    s.initial_speed = 20.0;
    s.torque.points = {{0.0, 100.0}};
    s.gear.points = {{0.0, 4}};
    const auto ds = generate_dataset(s, test_plant(), dataio::NoiseSpec{}, 6);

    observer::BenchmarkPredictor pred(test_vehicle(), test_tires(), 0.01);
    observer::ObserverConfig cfg;
    cfg.gain = observer::benchmark_gain_template();

    CostSpec spec;
    spec.state_terms = {{"vx", 1.0}};
    Eigen::VectorXd k(5);
    k << 0.0, 0.0, 0.0, -1e7, 0.0;
    CostDiagnostics diag;
    const double j = cost(k, ds, pred, cfg, spec, &diag, 5e8);
    CHECK(j == 5e8);
    CHECK(diag.diverged);
    CHECK(diag.step > 0);
}

TEST_CASE("gp interpolates its training points") {
    Rng rng(17);
    const Eigen::Index n = 30, d = 5;
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.uniform();
        y(i) = bowl(x.row(i).transpose());
    }
    const Surrogate s = Surrogate::fit(x, y, unit_box(d), 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const GpPrediction p = s.predict(x.row(i).transpose());
        CHECK(std::abs(p.mean - y(i)) <= 1e-6 * std::max(1.0, std::abs(y(i))));
    }
}

TEST_CASE("gp reverts to the prior far away from the data") {
    Eigen::MatrixXd x(3, 1);
    x << 0.0, 0.001, 0.002;
    Eigen::VectorXd y(3);
    y << 1.0, 1.2, 0.9;
    Box wide;
    wide.lo = Eigen::VectorXd::Zero(1);
    wide.hi = Eigen::VectorXd::Ones(1);
    GpHyper h;
    h.signal_var = 2.0;
    h.length_scales = Eigen::VectorXd::Constant(1, 0.05);
    const Surrogate s = Surrogate::fit_with_hyper(x, y, wide, h);

    // 0.7 in normalized units is 14 length scales from the farthest sample
    const GpPrediction far = s.predict(Eigen::VectorXd::Constant(1, 0.7));
    const double y_var = (y.array() - y.mean()).square().mean();
    const double prior_var = h.signal_var * y_var;
    CHECK(std::abs(far.variance - prior_var) <= 0.01 * prior_var);
}

TEST_CASE("gp matches the closed-form two-point posterior") {
    // Frozen from an independent linear-algebra evaluation of the posterior
    // equations (normalization, standardization, Matern-5/2, 1e-8 jitter).
    const Surrogate s = two_point_surrogate();
    const GpPrediction a = s.predict(Eigen::VectorXd::Constant(1, 0.4));
    CHECK(a.mean == doctest::Approx(1.564005325068984).epsilon(1e-10));
    CHECK(a.variance == doctest::Approx(0.40596584767520694).epsilon(1e-10));
    const GpPrediction b = s.predict(Eigen::VectorXd::Constant(1, 0.05));
    CHECK(b.mean == doctest::Approx(1.1116874710920948).epsilon(1e-10));
    CHECK(b.variance == doctest::Approx(0.31064785408936135).epsilon(1e-10));
}

TEST_CASE("gp falls back to the prior for duplicate-only inputs") {
    Eigen::MatrixXd x(3, 2);
    x << 0.5, 0.5, 0.5, 0.5, 0.5, 0.5;
    Eigen::VectorXd y(3);
    y << 1.0, 2.0, 3.0;
    const Surrogate s = Surrogate::fit(x, y, unit_box(2), 1);
    CHECK(s.degenerate());
    const GpPrediction p = s.predict(Eigen::VectorXd::Constant(2, 0.1));
    CHECK(p.mean == doctest::Approx(2.0));
    CHECK(p.variance > 0.0);
}

TEST_CASE("selected hyperparameters dominate every candidate tried") {
    Rng rng(23);
    Eigen::MatrixXd x(12, 2);
    Eigen::VectorXd y(12);
    for (Eigen::Index i = 0; i < 12; ++i) {
        x(i, 0) = rng.uniform();
        x(i, 1) = rng.uniform();
        y(i) = bowl(x.row(i).transpose());
    }
    const Surrogate s = Surrogate::fit(x, y, unit_box(2), 9);
    REQUIRE(!s.candidates_tried().empty());
    for (const auto& [hyper, lml] : s.candidates_tried()) {
        CHECK(s.log_marginal_likelihood() >= lml);
    }
}

TEST_CASE("gp prediction clips out-of-box queries") {
    const Surrogate s = two_point_surrogate();
    const GpPrediction p = s.predict(Eigen::VectorXd::Constant(1, 1.5));
    CHECK(p.clipped);
    const GpPrediction edge = s.predict(Eigen::VectorXd::Constant(1, 1.0));
    CHECK(p.mean == edge.mean);
}

TEST_CASE("expected improvement closed-form limits") {
    // duplicate inputs with identical costs give an exactly deterministic
    // surrogate: mean 2, variance 0
    Eigen::MatrixXd x(2, 1);
    x << 0.5, 0.5;
    Eigen::VectorXd y(2);
    y << 2.0, 2.0;
    const Surrogate flat = Surrogate::fit(x, y, unit_box(1), 1);
    const Eigen::VectorXd q = Eigen::VectorXd::Constant(1, 0.25);
    CHECK(flat.predict(q).variance == 0.0);

    SUBCASE("no gap, no improvement") {
        CHECK(expected_improvement(flat, q, 2.0) == 0.0);
        CHECK(expected_improvement(flat, q, 1.5) == 0.0);
    }
    SUBCASE("deterministic gap equals the gap") {
        CHECK(expected_improvement(flat, q, 2.75) == doctest::Approx(0.75).epsilon(1e-15));
    }
}

TEST_CASE("expected improvement at mu == best with unit variance") {
    // duplicate inputs, costs {1, 3}: prior fallback has mean 2, variance 1
    Eigen::MatrixXd x(2, 1);
    x << 0.5, 0.5;
    Eigen::VectorXd y(2);
    y << 1.0, 3.0;
    const Surrogate s = Surrogate::fit(x, y, unit_box(1), 1);
    const Eigen::VectorXd q = Eigen::VectorXd::Constant(1, 0.9);
    REQUIRE(s.predict(q).variance == doctest::Approx(1.0).epsilon(1e-15));
    REQUIRE(s.predict(q).mean == doctest::Approx(2.0).epsilon(1e-15));

    const double ei = expected_improvement(s, q, 2.0);
    CHECK(ei == doctest::Approx(0.3989422804014327).epsilon(1e-12));

    // Monte-Carlo oracle
    Rng rng(31);
    double sum = 0.0;
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) {
        const double sample = 2.0 + rng.gauss();
        sum += std::max(2.0 - sample, 0.0);
    }
    CHECK(std::abs(ei - sum / draws) <= 1e-3);
}

TEST_CASE("proposals stay inside the bounds box") {
    Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index d = 1 + trial % 4;
        Box box;
        box.lo.resize(d);
        box.hi.resize(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            box.lo(i) = rng.uniform(-5.0, 0.0);
            box.hi(i) = box.lo(i) + rng.uniform(0.5, 10.0);
        }
        const Eigen::Index n = 4 + trial % 5;
        Eigen::MatrixXd x(n, d);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) {
                x(i, j) = rng.uniform(box.lo(j), box.hi(j));
            }
            y(i) = rng.uniform(0.0, 5.0);
        }
        AcquisitionSettings fast;
        fast.candidates = 64;
        fast.refine_top = 2;
        const Surrogate s = Surrogate::fit(x, y, box, trial, 4);
        const Proposal p = propose_next(s, box, trial, fast);
        CHECK(box.contains(p.point));
    }
}

TEST_CASE("1-D proposal attains the dense-grid acquisition maximum") {
    Eigen::MatrixXd x(5, 1);
    x << 0.05, 0.3, 0.5, 0.7, 0.95;
    Eigen::VectorXd y(5);
    y << 2.0, 1.1, 1.4, 0.9, 2.2;
    const Box box = unit_box(1);
    const Surrogate s = Surrogate::fit(x, y, box, 51);

    double grid_max = 0.0;
    for (int i = 0; i <= 100000; ++i) {
        const Eigen::VectorXd q = Eigen::VectorXd::Constant(1, i / 100000.0);
        grid_max = std::max(grid_max, expected_improvement(s, q, s.best_cost()));
    }
    const Proposal p = propose_next(s, box, 7);
    CHECK(p.ei >= 0.999 * grid_max);
}

TEST_CASE("proposals are seed-deterministic") {
    const Surrogate s = two_point_surrogate();
    const Proposal a = propose_next(s, unit_box(1), 99);
    const Proposal b = propose_next(s, unit_box(1), 99);
    CHECK(a.point == b.point);
    CHECK(a.ei == b.ei);
}

TEST_CASE("tune finds the scaled-branin optimum region") {
    const Box box = branin_box();
    TuneConfig cfg;
    cfg.n_iter = 100;
    cfg.n_init = 4;
    cfg.seed = 2;
    const TuneResult r = tune([](const Eigen::VectorXd& x) { return scaled_branin(x); },
                              box, cfg);

    double grid_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 500; ++i) {
        for (int j = 0; j < 500; ++j) {
            Eigen::VectorXd q(2);
            q << box.lo(0) + (box.hi(0) - box.lo(0)) * i / 499.0,
                box.lo(1) + (box.hi(1) - box.lo(1)) * j / 499.0;
            grid_min = std::min(grid_min, scaled_branin(q));
        }
    }
    CHECK(r.best_cost <= 1.01 * grid_min);
    CHECK(static_cast<int>(r.history.size()) == 100);
}

TEST_CASE("tune history invariants") {
    const Box box = branin_box();
    TuneConfig cfg;
    cfg.n_iter = 30;
    cfg.n_init = 4;
    cfg.seed = 5;
    cfg.acquisition.candidates = 256;
    const TuneResult r = tune([](const Eigen::VectorXd& x) { return scaled_branin(x); },
                              box, cfg);

    double incumbent = std::numeric_limits<double>::infinity();
    for (const auto& rec : r.history) {
        CHECK(box.contains(rec.point));
        incumbent = std::min(incumbent, rec.cost);
        CHECK(rec.incumbent == incumbent);
    }
    for (std::size_t i = 1; i < r.history.size(); ++i) {
        CHECK(r.history[i].incumbent <= r.history[i - 1].incumbent);
    }
    CHECK(r.best_cost == incumbent);
}

TEST_CASE("tune is seed-deterministic") {
    const Box box = branin_box();
    TuneConfig cfg;
    cfg.n_iter = 20;
    cfg.n_init = 3;
    cfg.seed = 77;
    cfg.acquisition.candidates = 128;
    const auto f = [](const Eigen::VectorXd& x) { return scaled_branin(x); };
    const TuneResult a = tune(f, box, cfg);
    const TuneResult b = tune(f, box, cfg);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].point == b.history[i].point);
        CHECK(a.history[i].cost == b.history[i].cost);
    }
    cfg.seed = 78;
    const TuneResult c = tune(f, box, cfg);
    CHECK(c.history[0].point != a.history[0].point);
}

TEST_CASE("divergence penalties") {
    const Box box = unit_box(1);
    TuneConfig cfg;
    cfg.n_iter = 8;
    cfg.n_init = 2;
    cfg.seed = 3;
    cfg.acquisition.candidates = 64;

    SUBCASE("all-diverging objective uses the 1e9 fallback") {
        const TuneResult r =
            tune([](const Eigen::VectorXd&) { return std::optional<double>{}; }, box, cfg);
        for (const auto& rec : r.history) {
            CHECK(rec.diverged);
            CHECK(rec.cost == 1e9);
        }
    }
    SUBCASE("later divergences get 10x the worst finite cost") {
        int calls = 0;
        const TuneResult r = tune(
            [&calls](const Eigen::VectorXd& x) -> std::optional<double> {
                ++calls;
                if (calls == 3) return std::nullopt;
                return 5.0 + x(0);
            },
            box, cfg);
        REQUIRE(r.history.size() == 8);
        CHECK(r.history[2].diverged);
        const double worst =
            std::max(r.history[0].cost, r.history[1].cost);
        CHECK(r.history[2].cost == 10.0 * worst);
        CHECK(!r.history[3].diverged);
    }
}

TEST_CASE("tune config validation and file loading") {
    TuneConfig bad;
    bad.n_init = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.n_init = 10;
    bad.n_iter = 10;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    const auto dir = silo::test::scratch_dir("tune_config");
    {
        std::ofstream out(dir / "tune.json");
        out << R"({"n_iter": 50, "n_init": 6, "seed": 9,
                   "acquisition": {"candidates": 512, "refine_top": 4}})";
    }
    const TuneConfig cfg = load_tune_config(dir / "tune.json");
    CHECK(cfg.n_iter == 50);
    CHECK(cfg.n_init == 6);
    CHECK(cfg.seed == 9);
    CHECK(cfg.acquisition.candidates == 512);
}
