#pragma once

// Latent path simulation, Poisson sampling and noisy nonsynchronous
// observation of a two-dimensional diffusion.

#include "bql/common.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace bql {

/// dY1 = s1 dW1, dY2 = s3 dW1 + s2 dW2, Y0 = 0.
struct ConstantBM {
    double sigma1 = 1.0;
    double sigma2 = 0.8660254037844386;
    double sigma3 = 0.5;
};

/// Two-factor CIR with correlated square-root diffusion:
///   dY1 = (a1 - b1 Y1) dt + s1 sqrt(Y1) dW1
///   dY2 = (a2 - b2 Y2) dt + sqrt(Y2) (s3 dW1 + s2 dW2)
struct CIR {
    double alpha1 = 1.0, alpha2 = 1.0;
    double beta1 = 1.0, beta2 = 1.0;
    double sigma1 = 1.0, sigma2 = 0.8660254037844386, sigma3 = 0.5;
    double y01 = 1.0, y02 = 1.0;
};

using LatentModel = std::variant<ConstantBM, CIR>;

struct PathConfig {
    LatentModel model = ConstantBM{};
    double horizon = 1.0;
    std::size_t fine_grid_points = 100000;

    /// Throws ConfigError.
    void validate() const;
};

struct SamplingConfig {
    long n = 1000;
    std::array<double, 2> lambda{1.0, 1.0};

    void validate() const;
};

struct GaussianNoise {
    std::array<double, 2> variance{0.001, 0.001};
};

/// Gamma(shape, scale) minus its mean shape*scale.
struct CenteredGammaNoise {
    std::array<double, 2> shape{2.0, 2.0};
    std::array<double, 2> scale{0.022360679774997897, 0.022360679774997897};
};

struct NoiseConfig {
    std::variant<GaussianNoise, CenteredGammaNoise> kind = GaussianNoise{};

    void validate() const;
    /// Implied noise variance per component.
    std::array<double, 2> variance() const;
};

/// Latent path on an equidistant fine grid.
struct LatentPath {
    LatentModel model;
    double horizon = 1.0;
    std::vector<double> times;
    std::array<std::vector<double>, 2> values;

    std::size_t size() const { return times.size(); }
    /// Index of the last grid point <= t.
    std::size_t index_at(double t) const;
};

/// One irregularly sampled series (times strictly increasing).
struct Series {
    std::vector<double> times;
    std::vector<double> values;

    std::size_t size() const { return times.size(); }
};

/// Two noisy nonsynchronous series plus an optional covariate stream.
/// When `covariates` is empty the covariate process is the observed Y itself.
struct ObservationSet {
    std::array<Series, 2> y;
    std::vector<Series> covariates;
    double horizon = 1.0;
    std::optional<long> n;

    /// Explicit covariate stream if present, otherwise the two Y series.
    std::vector<Series> covariate_streams() const;
    /// Throws DataError on unsorted times, length mismatch or times outside [0,T].
    void validate() const;
};

LatentPath simulate_latent_path(const PathConfig& cfg, std::uint64_t seed);

/// Sampling times {0, Poisson(lambda*n) arrivals < T, T}.
std::vector<double> sample_poisson_times(double lambda, long n, double horizon, std::uint64_t seed);

ObservationSet observe(const LatentPath& path, const std::array<std::vector<double>, 2>& times,
                       const NoiseConfig& noise, std::uint64_t seed);

/// <Y1,Y2>_T: analytic for ConstantBM, fine-grid Riemann sum for CIR.
double true_quadratic_covariation(const LatentPath& path);

/// A complete simulated dataset.
struct SimulatedDataset {
    LatentPath path;
    ObservationSet observations;
    double true_qcov = 0.0;
};

/// Path, sampling times and noise with sub-seeds derived from `seed`.
SimulatedDataset simulate_dataset(const PathConfig& path, const SamplingConfig& sampling,
                                  const NoiseConfig& noise, std::uint64_t seed);

//----------------------------------------------------------------------------
// CSV: header `component,index,time,value`; covariate rows use `x1`, `x2`.
// Optional leading `# horizon=<T>` and `# n=<n>` metadata lines.
//----------------------------------------------------------------------------
void write_observations_csv(std::ostream& out, const ObservationSet& obs);
ObservationSet read_observations_csv(std::istream& in);

}  // namespace bql
