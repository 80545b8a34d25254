// bql: simulate, estimate, montecarlo and limits subcommands.

#include "bql/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<long> reps;
    std::optional<int> workers;
    bool bayes = false;
    bool baseline = false;
};

bql::RunConfig resolve(const Common& c) {
    bql::RunConfig cfg = c.config.empty() ? bql::RunConfig{} : bql::load_run_config(c.config);
    if (c.reps) cfg.replications = *c.reps;
    if (c.workers) cfg.workers = *c.workers;
    if (c.bayes) cfg.bayes = true;
    if (c.baseline) cfg.baseline = true;
    for (const auto& w : cfg.validate()) std::cerr << "warning: " << w << '\n';
    return cfg;
}

// Runs `body` with the --out file or stdout.
template <class F>
void with_output(const std::string& path, F&& body) {
    if (path.empty() || path == "-") {
        body(std::cout);
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw bql::Error("cannot open '" + path + "' for writing");
    body(f);
    if (!f) throw bql::Error("failed writing '" + path + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block quasi-likelihood estimation for noisy nonsynchronous diffusions"};
    app.require_subcommand(1);
    Common c;
    std::string input;

    auto add_config = [&](CLI::App* sub, bool required) {
        auto* opt = sub->add_option("--config", c.config, "run configuration (JSON)")->check(CLI::ExistingFile);
        if (required) opt->required();
        sub->add_option("--out", c.out, "output path (default: stdout)");
    };

    auto* sim = app.add_subcommand("simulate", "simulate one observation set and write it as CSV");
    add_config(sim, true);
    sim->add_option("--seed", c.seed, "dataset seed (default: master_seed)");

    auto* est = app.add_subcommand("estimate", "estimate sigma, noise and covariation from an observation CSV");
    est->add_option("input", input, "observation CSV")->required()->check(CLI::ExistingFile);
    add_config(est, false);
    est->add_flag("--bayes", c.bayes, "also compute the Bayes-type estimator");

    auto* mc = app.add_subcommand("montecarlo", "replicated simulate/estimate runs aggregated into a table");
    add_config(mc, true);
    mc->add_option("--seed", c.seed, "master seed");
    mc->add_option("--reps", c.reps, "number of replications")->check(CLI::PositiveNumber);
    mc->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
    mc->add_flag("--bayes", c.bayes, "include the Bayes-type estimator");
    mc->add_flag("--baseline", c.baseline, "include the previous-tick realized covariance");

    auto* lim = app.add_subcommand("limits", "Gamma1, Gamma2 and the theoretical minimum standard deviation");
    add_config(lim, true);

    CLI11_PARSE(app, argc, argv);

    try {
        bql::RunConfig cfg = resolve(c);
        if (sim->parsed()) {
            const std::uint64_t seed = c.seed.value_or(cfg.master_seed);
            with_output(c.out, [&](std::ostream& o) { bql::cmd_simulate(cfg, seed, o, std::cerr); });
        } else if (est->parsed()) {
            std::ifstream in(input, std::ios::binary);
            if (!in) throw bql::Error("cannot open '" + input + "'");
            with_output(c.out, [&](std::ostream& o) { bql::cmd_estimate(in, cfg, o); });
        } else if (mc->parsed()) {
            if (c.seed) cfg.master_seed = *c.seed;
            long last_pct = -1;
            auto progress = [&](long done, long total) {
                const long pct = 100 * done / total;
                if (pct / 10 != last_pct / 10) {
                    std::cerr << "[" << done << "/" << total << "]\n";
                    last_pct = pct;
                }
            };
            with_output(c.out, [&](std::ostream& o) { bql::cmd_montecarlo(cfg, o, std::cerr, progress); });
        } else if (lim->parsed()) {
            with_output(c.out, [&](std::ostream& o) { bql::cmd_limits(cfg, o); });
        }
    } catch (const bql::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 3;
    } catch (const bql::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
