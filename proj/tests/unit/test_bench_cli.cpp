#include "bql/commands.hpp"

#include "fixtures.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace bql;
using nlohmann::json;

namespace {

RunConfig small_config(long n, long reps) {
    RunConfig cfg = parse_run_config(R"({"sampling": {"n": 300}, "path": {"fine_grid_points": 5001}})");
    cfg.sampling.n = n;
    cfg.replications = reps;
    return cfg;
}

}  // namespace

TEST_CASE("run configuration parsing") {
    const RunConfig d = parse_run_config("{}");
    CHECK(d.sampling.n == 1000);
    CHECK(d.model == "constant");
    CHECK(d.baseline);
    CHECK_FALSE(d.bayes);
    CHECK_FALSE(d.blocks.has_value());
    CHECK(d.block_config().kn == 74);
    CHECK(d.box.lower == ConstantDiffusion::default_box().lower);

    const RunConfig c = parse_run_config(R"({
        "description": "example",
        "path": {"model": "cir", "sigma": [1, 0.8, 0.4], "alpha": [1.5, 1], "horizon": 2},
        "sampling": {"n": 2000, "lambda": [1, 2]},
        "noise": {"kind": "centered_gamma", "shape": [2, 2], "scale": [0.02, 0.03]},
        "blocks": {"bn": 2000},
        "model": {"lower": [0.1, -2, 0.1], "upper": [2, 2, 2]},
        "estimation": {"bayes": true, "baseline": false, "oracle_noise": true, "grid_points": 21},
        "limits": {"quadrature_points": 512},
        "replications": 40, "master_seed": 9, "workers": 3})");
    CHECK(c.model == "cir");
    CHECK(std::get<CIR>(c.path.model).alpha1 == 1.5);
    CHECK(std::get<CIR>(c.path.model).sigma2 == 0.8);
    CHECK(c.path.horizon == 2.0);
    CHECK(c.sampling.lambda[1] == 2.0);
    CHECK(c.noise.variance()[1] == doctest::Approx(2 * 0.03 * 0.03));
    REQUIRE(c.blocks.has_value());
    CHECK(c.blocks->kn == BlockConfig::from_rule(2000).kn);
    CHECK(c.box.upper[0] == 2.0);
    CHECK(c.bayes);
    CHECK_FALSE(c.baseline);
    CHECK(c.oracle_noise);
    CHECK(c.grid_points == 21);
    CHECK(c.quadrature_points == 512);
    CHECK(c.replications == 40);
    CHECK(c.master_seed == 9);
    CHECK(c.workers == 3);

    // Serialization round trip.
    const RunConfig back = parse_run_config(run_config_json(c));
    CHECK(run_config_json(back) == run_config_json(c));

    CHECK_THROWS_AS(parse_run_config(R"({"sampling": {"n": 10, "m": 3}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"replications": 0})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"sampling": {"n": "many"}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"blocks": "manual"})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"noise": {"kind": "gaussian", "shape": [1, 1]}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("{not json"), ConfigError);

    RunConfig outside = d;
    outside.box = Box((Vec(3) << 2.0, -3.0, 0.1).finished(), (Vec(3) << 3.0, 3.0, 3.0).finished());
    CHECK(outside.validate().size() == 1);
}

TEST_CASE("simulate command") {
    RunConfig cfg = small_config(500, 7);
    std::ostringstream a, b, info;
    cmd_simulate(cfg, 1, a, info);
    cmd_simulate(cfg, 1, b, info);
    CHECK(a.str() == b.str());
    const std::string text = a.str();
    const auto rows = std::count(text.begin(), text.end(), '\n');
    CHECK(rows > 2 * 500 * 0.9);
    CHECK(rows < 2 * 500 * 1.1);

    std::istringstream lines(info.str());
    std::string first;
    std::getline(lines, first);
    const json j = json::parse(first);
    CHECK(j["true_qcov"].get<double>() == doctest::Approx(0.5));
    CHECK(j["truth"] == "analytic");

    cfg.path.model = CIR{};
    cfg.model = "cir";
    std::ostringstream c, cir_info;
    cmd_simulate(cfg, 1, c, cir_info);
    const json k = json::parse(cir_info.str());
    CHECK(k["truth"] == "fine_grid_riemann_sum");
    CHECK(k["true_qcov"].get<double>() > 0.0);
}

TEST_CASE("estimate command") {
    const RunConfig cfg = small_config(800, 1);
    std::ostringstream csv, info;
    cmd_simulate(cfg, 3, csv, info);
    std::istringstream in(csv.str());
    std::ostringstream out;
    const EstimateReport rep = cmd_estimate(in, cfg, out);

    std::istringstream again(csv.str());
    const ConstantDiffusion model;
    const EstimateReport direct = estimate_pipeline(read_observations_csv(again), model);
    CHECK(rep.sigma_hat == direct.sigma_hat);
    CHECK(rep.qcov == direct.qcov);
    const json j = json::parse(out.str());
    CHECK(j["sigma_hat"][0].get<double>() == rep.sigma_hat[0]);
    CHECK(j["qcov"].get<double>() == rep.qcov);

    std::istringstream broken("component,index,time,value\n1,0,0,0\n1,1,0.5\n");
    std::ostringstream sink;
    try {
        cmd_estimate(broken, cfg, sink);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("Monte Carlo aggregation") {
    RunConfig cfg = small_config(400, 4);
    cfg.oracle_noise = true;
    std::ostringstream one, three, summary;
    cmd_montecarlo(cfg, one, summary);
    cfg.workers = 3;
    const MonteCarloTable t = cmd_montecarlo(cfg, three, summary);
    CHECK(one.str() == three.str());
    CHECK(one.str().rfind("estimator,coord,mean,sd,n,reps\n", 0) == 0);
    CHECK(t.completed == 4);
    CHECK(t.failures == 0);
    REQUIRE(t.theoretical_min_std.has_value());

    auto row = [&](const std::string& est, const std::string& coord) {
        for (const auto& r : t.rows)
            if (r.estimator == est && r.coord == coord) return r;
        FAIL("missing row " << est << "/" << coord);
        return MonteCarloRow{};
    };
    std::vector<double> s1;
    for (const auto& r : t.runs) s1.push_back(r.sigma_hat[0]);
    const auto [m, sd] = mean_sd(s1);
    CHECK(row("plug_in", "sigma1").mean == m);
    CHECK(row("plug_in", "sigma1").sd == sd);
    CHECK(row("oracle_noise", "sigma3").mean > 0.0);
    CHECK(row("qcov_baseline", "error").sd > 0.0);

    // A single replication reproduces the single-run report.
    cfg.replications = 1;
    const MonteCarloTable single = run_montecarlo(cfg);
    const ReplicationResult direct = run_replication(cfg, 0);
    for (const auto& r : single.rows) CHECK(r.sd == 0.0);
    CHECK(single.rows[5].mean == direct.sigma_hat[0]);  // plug_in sigma1
    std::istringstream none;
    const ConstantDiffusion model;
    const EstimateReport rep = estimate_pipeline(
        simulate_dataset(cfg.path, cfg.sampling, cfg.noise, mix_seed(cfg.master_seed, 0)).observations, model,
        cfg.estimate_options());
    CHECK(rep.sigma_hat == direct.sigma_hat);
    CHECK(rep.qcov == direct.qcov);
}

TEST_CASE("failed replications are isolated") {
    RunConfig cfg = small_config(1, 3);  // a single block: estimation cannot run
    const ReplicationResult r = run_replication(cfg, 0);
    CHECK_FALSE(r.ok);
    CHECK_FALSE(r.error.empty());
    CHECK_THROWS_AS(run_montecarlo(cfg), Error);
}

TEST_CASE("replication seeds give independent streams") {
    PathConfig path;
    path.fine_grid_points = 20001;
    const LatentPath a = simulate_latent_path(path, mix_seed(1, 0));
    const LatentPath b = simulate_latent_path(path, mix_seed(1, 1));
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 1; i < a.size(); ++i) {
        const double da = a.values[0][i] - a.values[0][i - 1];
        const double db = b.values[0][i] - b.values[0][i - 1];
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    CHECK(std::abs(sab / std::sqrt(saa * sbb)) < 4.0 / std::sqrt(20000.0));
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) != mix_seed(2, 0));
}

TEST_CASE("previous-tick realized covariance") {
    ObservationSet flat;
    flat.y[0] = Series{{0.0, 0.3, 0.6, 1.0}, {0.0, 1.0, -1.0, 2.0}};
    flat.y[1] = Series{{0.0, 0.5, 1.0}, {4.0, 4.0, 4.0}};
    CHECK(realized_cov_previous_tick(flat) == 0.0);
    ObservationSet tiny = flat;
    tiny.y[1] = Series{{0.0}, {1.0}};
    CHECK_THROWS_AS(realized_cov_previous_tick(tiny), DataError);

    // Hand case: component 2 sampled at 0, 0.5, 1.
    ObservationSet hand;
    hand.y[0] = Series{{0.0, 0.4, 0.8, 1.0}, {0.0, 1.0, 3.0, 2.0}};
    hand.y[1] = Series{{0.0, 0.5, 1.0}, {0.0, 2.0, 5.0}};
    // Aligned component 2: 0, 0, 2, 5.
    CHECK(realized_cov_previous_tick(hand) == doctest::Approx(1.0 * 0.0 + 2.0 * 2.0 + (-1.0) * 3.0));

    // Noiseless synchronous data: median over 50 paths within 10% of 0.5.
    NoiseConfig none;
    none.kind = GaussianNoise{{0.0, 0.0}};
    std::vector<double> t;
    for (int i = 0; i <= 5000; ++i) t.push_back(i / 5000.0);
    PathConfig path;
    path.fine_grid_points = 50001;
    std::vector<double> rc;
    for (int s = 0; s < 50; ++s) rc.push_back(realized_cov_previous_tick(observe(simulate_latent_path(path, s), {t, t}, none, 0)));
    std::nth_element(rc.begin(), rc.begin() + 25, rc.end());
    CHECK(rc[25] == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("baseline is worse than the likelihood estimate under heavy noise") {
    RunConfig cfg = small_config(1000, 20);
    cfg.noise.kind = GaussianNoise{{0.005, 0.005}};
    cfg.path.fine_grid_points = 20001;
    const MonteCarloTable t = run_montecarlo(cfg);
    double mle_sd = 0, base_rmse = 0;
    std::vector<double> err;
    for (const auto& r : t.runs) err.push_back(r.qcov - r.qcov_true);
    mle_sd = mean_sd(err).second;
    for (const auto& r : t.runs) base_rmse += (*r.baseline - r.qcov_true) * (*r.baseline - r.qcov_true);
    base_rmse = std::sqrt(base_rmse / static_cast<double>(t.runs.size()));
    CHECK(base_rmse > 1.5 * mle_sd);
}

TEST_CASE("limits command") {
    RunConfig cfg = parse_run_config(R"({"sampling": {"n": 5000}})");
    std::ostringstream out;
    cmd_limits(cfg, out);
    const json j = json::parse(out.str());
    CHECK(j["theoretical_min_std"].get<double>() == doctest::Approx(0.044).epsilon(0.05));
    CHECK(j["gamma2"][0][0].get<double>() == doctest::Approx(5e5));
    CHECK(j["gamma2"][1][1].get<double>() == doctest::Approx(5e5));
    CHECK(j["conditional_on_path"] == false);
    cfg.sampling.n = 1000;
    std::ostringstream out2;
    cmd_limits(cfg, out2);
    CHECK(json::parse(out2.str())["theoretical_min_std"].get<double>() == doctest::Approx(0.066).epsilon(0.05));
}
