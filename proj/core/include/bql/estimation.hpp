#pragma once

// Noise-variance estimation, the plug-in refinement, the maximum-likelihood
// and Bayes-type estimators of sigma, observed information and the quadratic
// covariation estimate.

#include "bql/optimize.hpp"
#include "bql/quasi_likelihood.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bql {

/// v_k = (2 J_k)^{-1} sum_i (Y^k_i - Y^k_{i-1})^2.
NoiseVar estimate_noise_variance(const ObservationSet& obs);

/// (v_k - C_k(sigma) / (2 J_k)) v 0 with C_k = sum_m |b^k_m(sigma)|^2 (s_m - s_{m-1}),
/// which is |b^k(sigma)|^2 T for state-independent models.
NoiseVar plug_in_noise(const NoiseVar& v_hat, const Vec& sigma, const BlockData& blocks, const DiffusionModel& model);

struct MleOptions {
    OptimizerOptions optimizer;
    /// Search only the nonnegative half of coordinates in which H_n is even
    /// (see DiffusionModel::sign_symmetric_coordinates).
    bool fold_symmetric = true;
};

struct MleResult {
    Vec sigma;
    double value = 0.0;
    long evaluations = 0;
    long iterations = 0;
    int restarts = 0;
    int failed_starts = 0;
    long jitter_events = 0;
};

MleResult mle(const QuasiLikelihood& ql, const NoiseVar& v, const MleOptions& opt = {});

/// -b_n^{-1/2} times the Hessian of H_n, symmetrized.
Mat observed_info(const QuasiLikelihood& ql, const Vec& sigma, const NoiseVar& v);
/// Same from any gradient of H_n.
Mat observed_info(const std::function<Vec(const Vec&)>& grad, const Vec& sigma, long bn);

/// Prior density on Lambda up to a constant; an empty function means uniform.
using Prior = std::function<double(const Vec&)>;
/// Log of an unnormalized density.
using LogDensity = std::function<double(const Vec&)>;

struct BayesOptions {
    int grid_points = 41;      // per axis, tensor grid for d <= 3
    double width_sds = 8.0;    // half-width of the integration box in posterior sds
    long mcmc_burn_in = 10000;
    long mcmc_samples = 50000;
    std::uint64_t seed = 0x2545f4914f6cdd1dULL;
    bool force_mcmc = false;
};

struct BayesResult {
    Vec mean;
    std::string method;  // "grid" or "metropolis"
    long evaluations = 0;
    double acceptance = 0.0;  // Metropolis only
    Box domain;               // region actually integrated
    std::vector<std::string> warnings;
};

/// Posterior mean of exp(log_target) on `box`. `mode` and `scale` (rough
/// posterior sds) place the integration region; it grows until the log-weight
/// on its boundary is negligible or it reaches the box.
BayesResult posterior_mean(const LogDensity& log_target, const Box& box, const Vec& mode, const Vec& scale,
                           const BayesOptions& opt = {});

/// Bayes-type estimator: posterior mean of sigma under exp(H_n(., v)) prior.
/// `mode` is an optional maximizer of H_n(., v) used to place the grid.
BayesResult bayes(const QuasiLikelihood& ql, const NoiseVar& v, const Prior& prior = {}, const BayesOptions& opt = {},
                  const std::optional<Vec>& mode = std::nullopt, const MleOptions& mle_opt = {});

struct Diagnostics {
    long iterations = 0;
    int restarts = 0;
    long evaluations = 0;
    long jitter_events = 0;
    int failed_starts = 0;
    std::size_t excluded_blocks = 0;
    std::size_t active_blocks = 0;
    std::vector<std::string> warnings;
};

struct EstimateReport {
    std::string model;
    long bn = 0;
    long kn = 0;
    double horizon = 1.0;
    Vec sigma_first;  // argmax H_n(., v_hat)
    Vec sigma_hat;    // argmax H_n(., v_plugin), the headline estimate
    NoiseVar v_hat{};
    NoiseVar v_plugin{};
    double h_value = 0.0;
    std::optional<Vec> sigma_bayes;
    Mat gamma_hat;
    bool gamma_positive_definite = false;
    std::optional<Vec> stderr_sigma;
    double qcov = 0.0;
    std::optional<double> qcov_stderr;
    Diagnostics diagnostics;
};

struct EstimateOptions {
    MleOptions mle;
    /// Block parameters; k_n = floor(b_n^{5/8}) with b_n from the data when empty.
    std::optional<BlockConfig> blocks;
    bool bayes = false;
    BayesOptions bayes_options;
    Prior prior;
};

/// v_hat -> sigma_first -> v_plugin -> sigma_hat, then observed information,
/// standard errors, covariation and (optionally) the Bayes estimate.
EstimateReport estimate_pipeline(const ObservationSet& obs, const DiffusionModel& model, const EstimateOptions& opt = {});

/// Covariation sum_m (b^1_m . b^2_m)(s_m - s_{m-1}) at sigma with its delta-method
/// standard error b_n^{-1/4} sqrt(grad^T gamma^{-1} grad); the error is empty if
/// gamma is not positive definite.
std::pair<double, std::optional<double>> covariation_estimate(const QuasiLikelihood& ql, const Vec& sigma,
                                                              const Mat& gamma);

/// JSON with fields sigma_hat, v_hat, v_plugin, sigma_bayes, gamma_hat, stderr,
/// qcov, qcov_stderr, diagnostics (plus a few descriptive extras).
std::string report_json(const EstimateReport& report, int indent = 2);

}  // namespace bql
