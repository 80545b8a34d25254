#pragma once

// Stream-level implementations of the command line subcommands.

#include "bql/montecarlo.hpp"

#include <cstdint>
#include <iosfwd>

namespace bql {

/// Writes the observation CSV to `csv` and a JSON line with the true
/// quadratic covariation to `info`.
void cmd_simulate(const RunConfig& cfg, std::uint64_t seed, std::ostream& csv, std::ostream& info);

/// Reads observations, runs the estimation pipeline and writes the report JSON.
EstimateReport cmd_estimate(std::istream& csv, const RunConfig& cfg, std::ostream& json);

/// Writes the table CSV to `csv` and a JSON run summary to `summary`.
MonteCarloTable cmd_montecarlo(const RunConfig& cfg, std::ostream& csv, std::ostream& summary,
                               const Progress& progress = {});

/// Writes Gamma1, Gamma2 and the theoretical minimum standard deviation as JSON.
/// State-dependent models use a latent path simulated from the master seed.
void cmd_limits(const RunConfig& cfg, std::ostream& json);

}  // namespace bql
