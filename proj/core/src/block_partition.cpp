#include "bql/block_partition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace bql {

BlockConfig BlockConfig::from_rule(long bn) {
    if (bn < 1) throw ConfigError("b_n must be >= 1");
    BlockConfig cfg;
    cfg.bn = bn;
    // floor(bn^{5/8}); the epsilon guards exact powers against pow() rounding down.
    cfg.kn = std::max(1L, static_cast<long>(std::floor(std::pow(static_cast<double>(bn), 0.625) + 1e-9)));
    return cfg;
}

long BlockConfig::default_bn(const ObservationSet& obs) {
    if (obs.n && *obs.n >= 1) return *obs.n;
    const double jmax = static_cast<double>(std::max(obs.y[0].size(), obs.y[1].size())) - 1.0;
    return std::max(1L, static_cast<long>(std::ceil(jmax / obs.horizon)));
}

void BlockConfig::validate() const {
    if (bn < 1) throw ConfigError("b_n must be >= 1");
    if (kn < 1 || kn > bn) throw ConfigError("k_n must satisfy 1 <= k_n <= b_n");
}

Vec Block::z() const {
    Vec out(static_cast<Eigen::Index>(dim()));
    Eigen::Index r = 0;
    for (int k = 0; k < 2; ++k) {
        for (double d : increments[k]) out[r++] = d;
    }
    return out;
}

std::vector<const Block*> BlockData::active() const {
    std::vector<const Block*> out;
    for (const auto& b : blocks) {
        if (!b.excluded) out.push_back(&b);
    }
    return out;
}

namespace {

// Last index i with times[i] < s, or -1.
long last_index_before(const std::vector<double>& times, double s) {
    const auto it = std::lower_bound(times.begin(), times.end(), s);
    return static_cast<long>(std::distance(times.begin(), it)) - 1;
}

std::vector<Overlap> compute_overlaps(const Block& b) {
    std::vector<Overlap> out;
    const auto& s1 = b.starts[0];
    const auto& e1 = b.ends[0];
    const auto& s2 = b.starts[1];
    const auto& e2 = b.ends[1];
    std::size_t j0 = 0;
    for (std::size_t i = 0; i < s1.size(); ++i) {
        const double lo1 = s1[i];
        const double hi1 = e1[i];
        // Skip component-2 intervals that end before this one starts.
        while (j0 < s2.size() && e2[j0] <= lo1) ++j0;
        for (std::size_t j = j0; j < s2.size() && s2[j] < hi1; ++j) {
            const double len = std::min(hi1, e2[j]) - std::max(lo1, s2[j]);
            if (len > 0.0) out.push_back({static_cast<int>(i), static_cast<int>(j), len});
        }
    }
    return out;
}

}  // namespace

BlockData build_blocks(const ObservationSet& obs, const BlockConfig& cfg) {
    cfg.validate();
    obs.validate();
    for (int k = 0; k < 2; ++k) {
        if (obs.y[k].size() < 2) {
            throw DataError("component " + std::to_string(k + 1) + " needs at least 2 observations");
        }
    }
    const long ell = cfg.block_count();
    if (ell < 2) throw ConfigError("block count l_n = floor(b_n/k_n) must be >= 2");

    BlockData data;
    data.config = cfg;
    data.horizon = obs.horizon;
    data.ell = ell;
    data.s.resize(static_cast<std::size_t>(ell) + 1);
    for (long m = 0; m <= ell; ++m) data.s[m] = obs.horizon * static_cast<double>(m) / static_cast<double>(ell);
    data.s.back() = obs.horizon;
    data.J = {static_cast<long>(obs.y[0].size()) - 1, static_cast<long>(obs.y[1].size()) - 1};

    const std::vector<Series> cov = obs.covariate_streams();
    std::vector<double> last_xhat(cov.size());
    for (std::size_t c = 0; c < cov.size(); ++c) {
        last_xhat[c] = cov[c].values.empty() ? 0.0 : cov[c].values.front();
    }

    std::array<long, 2> K_prev{-1, -1};
    data.r_max = 0.0;
    data.r_min = std::numeric_limits<double>::infinity();
    data.k_max = std::numeric_limits<long>::min();
    data.k_min = std::numeric_limits<long>::max();

    data.blocks.reserve(static_cast<std::size_t>(ell));
    for (long m = 1; m <= ell; ++m) {
        Block b;
        b.m = m;
        b.s_lo = data.s[m - 1];
        b.s_hi = data.s[m];
        for (int k = 0; k < 2; ++k) {
            const auto& t = obs.y[k].times;
            const auto& y = obs.y[k].values;
            b.K_prev[k] = K_prev[k];
            b.K[k] = last_index_before(t, b.s_hi);
            b.count[k] = b.K[k] - b.K_prev[k] - 1;
            data.k_max = std::max(data.k_max, b.count[k]);
            data.k_min = std::min(data.k_min, b.count[k]);
            for (long i = 0; i < b.count[k]; ++i) {
                const auto a = static_cast<std::size_t>(b.K_prev[k] + 1 + i);
                const double len = t[a + 1] - t[a];
                b.starts[k].push_back(t[a]);
                b.ends[k].push_back(t[a + 1]);
                b.lengths[k].push_back(len);
                b.increments[k].push_back(y[a + 1] - y[a]);
                data.r_max = std::max(data.r_max, len);
                data.r_min = std::min(data.r_min, len);
            }
            K_prev[k] = b.K[k];
        }
        b.degenerate = b.count[0] <= 0 || b.count[1] <= 0;
        b.excluded = b.degenerate || m == 1;
        b.overlaps = compute_overlaps(b);

        b.xhat.resize(cov.size());
        for (std::size_t c = 0; c < cov.size(); ++c) {
            const auto& ct = cov[c].times;
            const auto lo = std::lower_bound(ct.begin(), ct.end(), b.s_lo);
            // The last block is closed on the right so that an observation at T is used.
            const auto hi = m == ell ? std::upper_bound(ct.begin(), ct.end(), b.s_hi)
                                     : std::lower_bound(ct.begin(), ct.end(), b.s_hi);
            if (hi > lo) {
                double acc = 0.0;
                for (auto it = lo; it != hi; ++it) acc += cov[c].values[static_cast<std::size_t>(it - ct.begin())];
                last_xhat[c] = acc / static_cast<double>(hi - lo);
            }
            b.xhat[c] = last_xhat[c];
        }
        if (b.excluded) ++data.excluded_count;
        data.blocks.push_back(std::move(b));
    }
    if (!std::isfinite(data.r_min)) data.r_min = 0.0;
    return data;
}

Mat overlap_matrix(const Block& block) {
    const auto n1 = static_cast<Eigen::Index>(std::max(0L, block.count[0]));
    const auto n2 = static_cast<Eigen::Index>(std::max(0L, block.count[1]));
    Mat g = Mat::Zero(n1, n2);
    for (const auto& o : block.overlaps) g(o.i, o.j) = o.length;
    return g;
}

void write_blocks_csv(std::ostream& out, const BlockData& data) {
    out << "m,s_m,k1_m,k2_m,degenerate\n";
    char buf[40];
    for (const auto& b : data.blocks) {
        std::snprintf(buf, sizeof buf, "%.17g", b.s_hi);
        out << b.m << ',' << buf << ',' << b.count[0] << ',' << b.count[1] << ',' << (b.degenerate ? 1 : 0) << '\n';
    }
}

}  // namespace bql
