#pragma once

// Run configuration shared by the command line tool and the Monte Carlo
// harness. The JSON schema is documented in docs/config.md.

#include "bql/asymptotic_limits.hpp"
#include "bql/block_partition.hpp"
#include "bql/diffusion_sim.hpp"
#include "bql/estimation.hpp"
#include "bql/model.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bql {

struct RunConfig {
    PathConfig path;
    SamplingConfig sampling;
    NoiseConfig noise;
    std::optional<BlockConfig> blocks;  // empty: k_n = floor(b_n^{5/8}) with b_n = n
    std::string model = "constant";
    Box box = ConstantDiffusion::default_box();

    bool bayes = false;
    bool baseline = true;
    bool oracle_noise = false;  // also maximize H_n(., v*) with the true noise variance
    int grid_points = 41;
    int quadrature_points = 2048;

    long replications = 1;
    std::uint64_t master_seed = 1;
    int workers = 1;

    /// Throws ConfigError. Returns non-fatal warnings.
    std::vector<std::string> validate() const;

    std::unique_ptr<DiffusionModel> make_model() const;
    BlockConfig block_config() const;
    EstimateOptions estimate_options() const;
    /// True parameter vector of the simulated latent model.
    Vec sigma_star() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_json(const RunConfig& cfg, int indent = 2);

/// Limit context of the simulation design (constant intensities, v* from the noise).
LimitContext limit_context(const RunConfig& cfg, const DiffusionModel& model,
                           const std::optional<LatentPath>& path = std::nullopt);

}  // namespace bql
