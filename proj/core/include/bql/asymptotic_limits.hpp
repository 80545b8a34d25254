#pragma once

// Limit objects of the quasi-likelihood: the functions Y0, Y1, Y2, the
// information matrices Gamma1 and Gamma2 and the asymptotic minimum standard
// deviation of the covariation estimator.

#include "bql/diffusion_sim.hpp"
#include "bql/model.hpp"
#include "bql/quasi_likelihood.hpp"

#include <array>
#include <functional>
#include <optional>

namespace bql {

struct LimitContext {
    /// Must outlive the context.
    const DiffusionModel* model = nullptr;
    Vec sigma_star;
    NoiseVar v_star{0.001, 0.001};
    /// Sampling densities a^j_t; constant intensities unless `density` is set.
    std::array<double, 2> lambda{1.0, 1.0};
    std::function<std::array<double, 2>(double)> density;
    /// Latent path supplying x_t for state-dependent coefficients. Results are
    /// conditional on this path.
    std::optional<LatentPath> path;
    double horizon = 1.0;
    int quadrature_points = 2048;

    void validate() const;
    std::array<double, 2> a(double t) const;
    std::array<double, 2> x(double t) const;
    /// True when every integrand is constant in t.
    bool time_homogeneous() const;
};

/// sqrt(x + sqrt(x^2 - 4y)) + sqrt(x - sqrt(x^2 - 4y)) for 0 <= 4y <= x^2.
double varphi(double x, double y);

double Y0(const LimitContext& ctx, const Vec& sigma);
double Y1(const LimitContext& ctx, const Vec& sigma);
double Y2(const LimitContext& ctx, const NoiseVar& v);

/// Minus the central-difference Hessian of Y1 at sigma*, symmetrized.
Mat Gamma1(const LimitContext& ctx);
/// diag(int a^1 dt / (2 v1*^2), int a^2 dt / (2 v2*^2)).
Mat Gamma2(const LimitContext& ctx);

/// n^{-1/4} sqrt(g^T Gamma1^{-1} g) with g the sigma-gradient of the covariation
/// int b^1.b^2 dt at sigma*; for the constant model g = T (s3, 0, s1).
double theoretical_min_std(const LimitContext& ctx, long n);
double theoretical_min_std(const LimitContext& ctx, const Mat& gamma1, long n);

}  // namespace bql
