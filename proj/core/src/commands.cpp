#include "bql/commands.hpp"

#include <json.hpp>

#include <istream>
#include <ostream>

namespace bql {

using nlohmann::json;

namespace {

json mat_json(const Mat& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        a.push_back(row);
    }
    return a;
}

}  // namespace

void cmd_simulate(const RunConfig& cfg, std::uint64_t seed, std::ostream& csv, std::ostream& info) {
    cfg.validate();
    const SimulatedDataset ds = simulate_dataset(cfg.path, cfg.sampling, cfg.noise, seed);
    write_observations_csv(csv, ds.observations);
    const bool cir = std::holds_alternative<CIR>(cfg.path.model);
    json j;
    j["seed"] = seed;
    j["true_qcov"] = ds.true_qcov;
    j["truth"] = cir ? "fine_grid_riemann_sum" : "analytic";
    j["observations"] = {ds.observations.y[0].size(), ds.observations.y[1].size()};
    info << j.dump() << '\n';
}

EstimateReport cmd_estimate(std::istream& csv, const RunConfig& cfg, std::ostream& out) {
    const ObservationSet obs = read_observations_csv(csv);
    const auto model = cfg.make_model();
    EstimateOptions opt;
    opt.blocks = cfg.blocks;
    opt.bayes = cfg.bayes;
    opt.bayes_options.grid_points = cfg.grid_points;
    EstimateReport rep = estimate_pipeline(obs, *model, opt);
    out << report_json(rep) << '\n';
    return rep;
}

MonteCarloTable cmd_montecarlo(const RunConfig& cfg, std::ostream& csv, std::ostream& summary,
                               const Progress& progress) {
    MonteCarloTable table = run_montecarlo(cfg, progress);
    write_table_csv(csv, table);
    json j;
    j["replications"] = table.replications;
    j["completed"] = table.completed;
    j["failures"] = table.failures;
    j["runtime_seconds"] = table.runtime_seconds;
    json errors = json::array();
    for (const auto& r : table.runs)
        if (!r.ok) errors.push_back({{"replication", r.index}, {"error", r.error}});
    j["failed"] = errors;
    summary << j.dump() << '\n';
    return table;
}

void cmd_limits(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    const auto model = cfg.make_model();
    std::optional<LatentPath> path;
    if (!model->state_independent()) path = simulate_latent_path(cfg.path, mix_seed(cfg.master_seed, 1));
    const LimitContext ctx = limit_context(cfg, *model, path);
    const Mat g1 = Gamma1(ctx);
    json j;
    j["n"] = cfg.sampling.n;
    j["sigma_star"] = std::vector<double>(ctx.sigma_star.data(), ctx.sigma_star.data() + ctx.sigma_star.size());
    j["v_star"] = ctx.v_star;
    j["gamma1"] = mat_json(g1);
    j["gamma2"] = mat_json(Gamma2(ctx));
    j["theoretical_min_std"] = theoretical_min_std(ctx, g1, cfg.sampling.n);
    j["conditional_on_path"] = path.has_value();
    out << j.dump(2) << '\n';
}

}  // namespace bql
