#pragma once

#include "bql/block_partition.hpp"
#include "bql/diffusion_sim.hpp"

#include <cmath>

namespace bql::fixtures {

inline const Vec& sigma_star() {
    static const Vec s = (Vec(3) << 1.0, std::sqrt(0.75), 0.5).finished();
    return s;
}

/// ConstantBM data at the standard parameters with Gaussian noise.
inline SimulatedDataset constant_bm(long n, double v, std::uint64_t seed, std::size_t grid = 20001) {
    PathConfig path;
    path.fine_grid_points = grid;
    SamplingConfig sampling;
    sampling.n = n;
    NoiseConfig noise;
    noise.kind = GaussianNoise{{v, v}};
    return simulate_dataset(path, sampling, noise, seed);
}

inline BlockData blocks_for(const ObservationSet& obs, long bn) {
    return build_blocks(obs, BlockConfig::from_rule(bn));
}

}  // namespace bql::fixtures
