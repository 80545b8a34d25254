#include "bql/montecarlo.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <thread>

namespace bql {

double realized_cov_previous_tick(const ObservationSet& obs) {
    const Series& a = obs.y[0];
    const Series& b = obs.y[1];
    if (a.size() < 2 || b.size() < 2) throw DataError("realized covariance needs at least 2 observations per component");
    std::size_t j = 0;
    auto aligned = [&](double t) {
        while (j + 1 < b.size() && b.times[j + 1] <= t) ++j;
        return b.values[j];
    };
    double prev = aligned(a.times[0]);
    double acc = 0.0;
    for (std::size_t i = 1; i < a.size(); ++i) {
        const double cur = aligned(a.times[i]);
        acc += (a.values[i] - a.values[i - 1]) * (cur - prev);
        prev = cur;
    }
    return acc;
}

ReplicationResult run_replication(const RunConfig& cfg, long index) {
    ReplicationResult r;
    r.index = index;
    r.seed = mix_seed(cfg.master_seed, static_cast<std::uint64_t>(index));
    try {
        const SimulatedDataset ds = simulate_dataset(cfg.path, cfg.sampling, cfg.noise, r.seed);
        r.qcov_true = ds.true_qcov;
        const auto model = cfg.make_model();
        const EstimateOptions opt = cfg.estimate_options();
        const EstimateReport rep = estimate_pipeline(ds.observations, *model, opt);
        r.sigma_first = rep.sigma_first;
        r.v_hat = rep.v_hat;
        r.sigma_hat = rep.sigma_hat;
        r.v_plugin = rep.v_plugin;
        r.sigma_bayes = rep.sigma_bayes;
        r.stderr_sigma = rep.stderr_sigma;
        r.qcov = rep.qcov;
        r.qcov_stderr = rep.qcov_stderr;
        r.jitter_events = rep.diagnostics.jitter_events;
        if (cfg.oracle_noise) {
            const BlockData blocks = build_blocks(ds.observations, *opt.blocks);
            const QuasiLikelihood ql(blocks, *model);
            r.sigma_oracle = mle(ql, cfg.noise.variance(), opt.mle).sigma;
        }
        if (cfg.baseline) r.baseline = realized_cov_previous_tick(ds.observations);
        r.ok = true;
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
    }
    return r;
}

std::pair<double, double> mean_sd(const std::vector<double>& x) {
    if (x.empty()) return {std::nan(""), std::nan("")};
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    if (x.size() < 2) return {m, 0.0};
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return {m, std::sqrt(s / static_cast<double>(x.size() - 1))};
}

MonteCarloTable run_montecarlo(const RunConfig& cfg, const Progress& progress) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    MonteCarloTable table;
    table.n = cfg.sampling.n;
    table.replications = cfg.replications;
    table.runs.resize(static_cast<std::size_t>(cfg.replications));

    std::atomic<long> next{0};
    std::atomic<long> done{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (long i = next++; i < cfg.replications; i = next++) {
            table.runs[static_cast<std::size_t>(i)] = run_replication(cfg, i);
            const long d = ++done;
            if (progress) {
                std::lock_guard<std::mutex> lock(progress_mutex);
                progress(d, cfg.replications);
            }
        }
    };
    const int nthreads = static_cast<int>(std::min<long>(cfg.workers, cfg.replications));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Aggregation in replication order, independent of scheduling.
    std::vector<const ReplicationResult*> ok;
    for (const auto& r : table.runs) {
        if (r.ok) ok.push_back(&r);
    }
    table.completed = static_cast<long>(ok.size());
    table.failures = cfg.replications - table.completed;
    if (ok.empty()) throw Error("every replication failed; first error: " + table.runs.front().error);

    auto add = [&](const std::string& est, const std::string& coord, auto&& pick) {
        std::vector<double> xs;
        for (const auto* r : ok) {
            const std::optional<double> v = pick(*r);
            if (v) xs.push_back(*v);
        }
        if (xs.empty()) return;
        const auto [m, s] = mean_sd(xs);
        table.rows.push_back({est, coord, m, s});
    };
    const char* names[] = {"sigma1", "sigma2", "sigma3"};
    auto sigma_rows = [&](const std::string& est, auto&& vec_of) {
        for (int j = 0; j < 3; ++j) {
            add(est, names[j], [&](const ReplicationResult& r) -> std::optional<double> {
                const std::optional<Vec> v = vec_of(r);
                if (!v || v->size() <= j) return std::nullopt;
                return (*v)[j];
            });
        }
    };

    sigma_rows("first_stage", [](const ReplicationResult& r) { return std::optional<Vec>(r.sigma_first); });
    add("first_stage", "v1", [](const ReplicationResult& r) { return std::optional<double>(r.v_hat[0]); });
    add("first_stage", "v2", [](const ReplicationResult& r) { return std::optional<double>(r.v_hat[1]); });
    sigma_rows("plug_in", [](const ReplicationResult& r) { return std::optional<Vec>(r.sigma_hat); });
    add("plug_in", "v1", [](const ReplicationResult& r) { return std::optional<double>(r.v_plugin[0]); });
    add("plug_in", "v2", [](const ReplicationResult& r) { return std::optional<double>(r.v_plugin[1]); });
    if (cfg.oracle_noise) sigma_rows("oracle_noise", [](const ReplicationResult& r) { return r.sigma_oracle; });
    if (cfg.bayes) sigma_rows("bayes", [](const ReplicationResult& r) { return r.sigma_bayes; });
    add("qcov_mle", "estimate", [](const ReplicationResult& r) { return std::optional<double>(r.qcov); });
    add("qcov_mle", "error", [](const ReplicationResult& r) { return std::optional<double>(r.qcov - r.qcov_true); });
    if (cfg.baseline) {
        add("qcov_baseline", "estimate", [](const ReplicationResult& r) { return r.baseline; });
        add("qcov_baseline", "error", [](const ReplicationResult& r) -> std::optional<double> {
            if (!r.baseline) return std::nullopt;
            return *r.baseline - r.qcov_true;
        });
    }

    const auto model = cfg.make_model();
    if (model->state_independent()) {
        try {
            table.theoretical_min_std = theoretical_min_std(limit_context(cfg, *model), cfg.sampling.n);
            table.rows.push_back({"theoretical_min", "qcov_sd", *table.theoretical_min_std, 0.0});
        } catch (const Error&) {
            // Gamma1 singular for this design; the row is omitted.
        }
    }
    table.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return table;
}

void write_table_csv(std::ostream& out, const MonteCarloTable& table) {
    out << "estimator,coord,mean,sd,n,reps\n";
    char buf[256];
    for (const auto& row : table.rows) {
        std::snprintf(buf, sizeof buf, "%s,%s,%.10g,%.10g,%ld,%ld\n", row.estimator.c_str(), row.coord.c_str(), row.mean,
                      row.sd, table.n, table.completed);
        out << buf;
    }
}

}  // namespace bql
