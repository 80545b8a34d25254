#pragma once

// Partition of [0,T] into l_n equal blocks and the per-block objects that
// enter the quasi-likelihood: increments, interval lengths, overlaps and
// local covariate averages.

#include "bql/diffusion_sim.hpp"

#include <array>
#include <iosfwd>
#include <vector>

namespace bql {

struct BlockConfig {
    long bn = 1;
    long kn = 1;

    /// k_n = floor(b_n^{5/8}).
    static BlockConfig from_rule(long bn);
    /// b_n from the observation set: its `n` if present, else ceil(max_k J_k / T).
    static long default_bn(const ObservationSet& obs);

    void validate() const;
    long block_count() const { return bn / kn; }
};

/// Nonzero entry of the overlap matrix G_m (0-based interval indices).
struct Overlap {
    int i = 0;  // component-1 interval
    int j = 0;  // component-2 interval
    double length = 0.0;
};

/// One block [s_{m-1}, s_m). Interval I^k_{i,m} = [S^k_{K^k_{m-1}+i}, S^k_{K^k_{m-1}+i+1}).
struct Block {
    long m = 0;  // 1-based
    double s_lo = 0.0;
    double s_hi = 0.0;
    std::array<long, 2> K_prev{};  // K^k_{m-1}
    std::array<long, 2> K{};       // K^k_m
    std::array<long, 2> count{};   // k^k_m = K^k_m - K^k_{m-1} - 1
    std::array<std::vector<double>, 2> starts;
    std::array<std::vector<double>, 2> ends;
    std::array<std::vector<double>, 2> lengths;
    std::array<std::vector<double>, 2> increments;
    std::vector<Overlap> overlaps;  // sorted by (i, j)
    std::vector<double> xhat;       // local covariate average
    bool degenerate = false;        // some k^k_m <= 0
    bool excluded = false;          // degenerate or m == 1

    std::size_t dim() const { return static_cast<std::size_t>(std::max(0L, count[0]) + std::max(0L, count[1])); }
    /// Z_m: component-1 increments followed by component-2 increments.
    Vec z() const;
};

struct BlockData {
    BlockConfig config;
    double horizon = 1.0;
    long ell = 0;
    std::vector<double> s;  // s_0 .. s_ell
    std::vector<Block> blocks;
    std::array<long, 2> J{};  // number of increments per component
    double r_max = 0.0;       // r_n
    double r_min = 0.0;       // underline r_n
    long k_max = 0;
    long k_min = 0;
    std::size_t excluded_count = 0;

    /// Blocks that enter the likelihood sums.
    std::vector<const Block*> active() const;
};

BlockData build_blocks(const ObservationSet& obs, const BlockConfig& cfg);

/// Dense G_m with (G_m)_{ij} = |I^1_{i,m} ∩ I^2_{j,m}|.
Mat overlap_matrix(const Block& block);

/// Debug dump: `m,s_m,k1_m,k2_m,degenerate`.
void write_blocks_csv(std::ostream& out, const BlockData& data);

}  // namespace bql
