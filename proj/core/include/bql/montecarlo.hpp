#pragma once

// Replicated simulate -> estimate runs with deterministic aggregation, and the
// previous-tick realized covariance used as a naive baseline.

#include "bql/config.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bql {

/// Component 2 is aligned to component-1 times by its last value at or before
/// each time; returns sum of dY1 * dY2_aligned.
double realized_cov_previous_tick(const ObservationSet& obs);

struct ReplicationResult {
    long index = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;

    Vec sigma_first;
    NoiseVar v_hat{};
    Vec sigma_hat;
    NoiseVar v_plugin{};
    std::optional<Vec> sigma_oracle;
    std::optional<Vec> sigma_bayes;
    std::optional<Vec> stderr_sigma;
    double qcov = 0.0;
    std::optional<double> qcov_stderr;
    double qcov_true = 0.0;
    std::optional<double> baseline;
    long jitter_events = 0;
};

/// One replication with seed mix_seed(master_seed, index).
ReplicationResult run_replication(const RunConfig& cfg, long index);

struct MonteCarloRow {
    std::string estimator;
    std::string coord;
    double mean = 0.0;
    double sd = 0.0;
};

struct MonteCarloTable {
    long n = 0;
    long replications = 0;  // requested
    long completed = 0;
    long failures = 0;
    double runtime_seconds = 0.0;
    std::optional<double> theoretical_min_std;
    std::vector<MonteCarloRow> rows;
    std::vector<ReplicationResult> runs;  // in replication order
};

using Progress = std::function<void(long done, long total)>;

/// Runs cfg.replications replications on cfg.workers threads. Failed
/// replications are recorded and left out of the statistics; throws Error if
/// every replication fails.
MonteCarloTable run_montecarlo(const RunConfig& cfg, const Progress& progress = {});

/// Header `estimator,coord,mean,sd,n,reps`.
void write_table_csv(std::ostream& out, const MonteCarloTable& table);

/// Sample mean and standard deviation (n - 1 denominator).
std::pair<double, double> mean_sd(const std::vector<double>& x);

}  // namespace bql
