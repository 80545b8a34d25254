#pragma once

// Block quasi-log-likelihood
//   H_n(sigma, v) = -1/2 sum_{m>=2} [ Z_m^T S_m(sigma,v)^{-1} Z_m + log det S_m(sigma,v) ]
// with S_m = [diag(|b^1_m|^2 |I^1|) + v1 M, (b^1_m.b^2_m) G_m; ..., diag(|b^2_m|^2 |I^2|) + v2 M].
//
// Each S_m is evaluated after reordering the increments of both components
// by interval start time; in that order S_m has a narrow profile and is
// factored with a skyline Cholesky.

#include "bql/profile.hpp"
#include "bql/block_partition.hpp"
#include "bql/model.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace bql {

using NoiseVar = std::array<double, 2>;

/// Lower bound applied to v before assembly.
inline constexpr double kNoiseFloor = 1e-12;

/// Dense S_m in natural order (component 1 then component 2).
struct BlockCovariance {
    long m = 0;
    Mat S;
    Mat cholesky;  // lower factor of S (+ jitter if any)
    double logdet = 0.0;
    int jitter_steps = 0;
};

/// Dense assembly and factorization following the jitter policy.
BlockCovariance assemble_S(const Block& block, const DiffusionModel& model, const Vec& sigma, const NoiseVar& v);

struct Evaluation {
    double value = 0.0;
    Vec gradient;  // empty unless requested
    long jitter_events = 0;
};

class QuasiLikelihood {
public:
    /// Keeps references to `blocks` and `model`; both must outlive this object.
    QuasiLikelihood(const BlockData& blocks, const DiffusionModel& model);
    /// Takes ownership of a temporary block decomposition.
    QuasiLikelihood(BlockData&& blocks, const DiffusionModel& model);

    const BlockData& blocks() const { return *blocks_; }
    const DiffusionModel& model() const { return *model_; }
    long bn() const { return blocks_->config.bn; }
    std::size_t active_blocks() const { return prepared_.size(); }
    /// Largest profile row width over the active blocks.
    int max_profile_width() const;

    Evaluation evaluate(const Vec& sigma, const NoiseVar& v, bool with_gradient = false) const;

    double value(const Vec& sigma, const NoiseVar& v) const { return evaluate(sigma, v).value; }
    Vec gradient(const Vec& sigma, const NoiseVar& v) const { return evaluate(sigma, v, true).gradient; }

    /// Central differences of the analytic gradient, h_j = 1e-4 (1 + |sigma_j|).
    Mat hessian(const Vec& sigma, const NoiseVar& v) const;

    /// Z_m^T S_m^{-1} Z_m and dim for every active block (exactness diagnostics).
    std::vector<std::pair<double, std::size_t>> quadratic_forms(const Vec& sigma, const NoiseVar& v) const;

    /// Sum over all blocks of (b^1_m . b^2_m)(s_m - s_{m-1}) and its gradient:
    /// the model's quadratic covariation functional.
    std::pair<double, Vec> covariation(const Vec& sigma) const;

private:
    struct Link {
        int row = 0;  // higher row index
        int col = 0;
        double value = 0.0;
    };
    struct Prepared {
        const Block* block = nullptr;
        int n = 0;
        SymProfileMatrix shape;
        std::vector<std::uint8_t> comp;  // per row: 0 or 1
        std::vector<double> length;      // per row: |I|
        std::vector<double> z;           // per row: increment
        std::array<std::vector<Link>, 2> noise_links;
        std::vector<Link> overlap_links;
    };

    Prepared prepare(const Block& b) const;
    void assemble(const Prepared& p, const LocalCovariance& lc, const NoiseVar& v, double jitter,
                  SymProfileMatrix& s) const;
    /// Factor with the jitter policy; returns the number of escalation steps used.
    int factor(const Prepared& p, const LocalCovariance& lc, const NoiseVar& v, SymProfileMatrix& s) const;

    std::shared_ptr<const BlockData> owned_;
    const BlockData* blocks_;
    const DiffusionModel* model_;
    std::vector<Prepared> prepared_;
};

}  // namespace bql
