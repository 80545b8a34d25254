#include "bql/asymptotic_limits.hpp"

#include "fixtures.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <cmath>
#include <random>

using namespace bql;

namespace {

LimitContext constant_context(const DiffusionModel& model, double v) {
    LimitContext ctx;
    ctx.model = &model;
    ctx.sigma_star = fixtures::sigma_star();
    ctx.v_star = {v, v};
    return ctx;
}

}  // namespace

TEST_CASE("varphi") {
    CHECK(varphi(2.0, 1.0) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-14));
    CHECK(varphi(5.0, 4.0) == doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-14));
    for (double x : {0.0, 0.3, 7.0}) CHECK(varphi(x, 0.0) == doctest::Approx(std::sqrt(2.0 * x)).epsilon(1e-14));
    // Rounding just above the discriminant boundary is clamped.
    CHECK(varphi(2.0, 1.0 + 1e-15) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-7));
    CHECK_THROWS_AS(varphi(2.0, 1.01), DomainError);
    CHECK_THROWS_AS(varphi(-1.0, 0.0), DomainError);
}

TEST_CASE("limit functions vanish at the truth") {
    const ConstantDiffusion model;
    const LimitContext ctx = constant_context(model, 0.001);
    CHECK(std::abs(Y1(ctx, ctx.sigma_star)) < 1e-12);
    CHECK(std::abs(Y0(ctx, ctx.sigma_star)) < 1e-12);
    CHECK(std::abs(Y2(ctx, ctx.v_star)) < 1e-12);
    CHECK(Y2(ctx, {0.002, 0.001}) < 0.0);
    CHECK(Y0(ctx, (Vec(3) << 1.3, 0.7, 0.4).finished()) < 0.0);
}

TEST_CASE("Y1 is negative away from the truth") {
    const ConstantDiffusion model;
    const LimitContext ctx = constant_context(model, 0.001);
    std::mt19937_64 rng(4);
    const Box& box = model.box();
    for (int i = 0; i < 50; ++i) {
        Vec s(3);
        for (int j = 0; j < 3; ++j) s[j] = std::uniform_real_distribution<double>(box.lower[j], box.upper[j])(rng);
        CHECK(Y1(ctx, s) < 0.0);
    }
    // Only b b^T is identified: the sigma2 mirror image attains the maximum too.
    Vec mirror = ctx.sigma_star;
    mirror[1] = -mirror[1];
    CHECK(std::abs(Y1(ctx, mirror)) < 1e-12);
}

TEST_CASE("identifiability on the sigma2 >= 0 half of the box") {
    const ConstantDiffusion model;
    const LimitContext ctx = constant_context(model, 0.001);
    const Box& box = model.box();
    double worst = std::numeric_limits<double>::infinity();
    const int g = 20;
    for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b)
            for (int c = 0; c < g; ++c) {
                const Vec s = (Vec(3) << box.lower[0] + (a + 0.5) * box.width()[0] / g,
                               (b + 0.5) * box.upper[1] / g,
                               box.lower[2] + (c + 0.5) * box.width()[2] / g)
                                  .finished();
                worst = std::min(worst, -Y1(ctx, s) / (s - ctx.sigma_star).squaredNorm());
            }
    CHECK(worst > 0.0);
}

TEST_CASE("information matrices") {
    const ConstantDiffusion model;
    const LimitContext ctx = constant_context(model, 0.001);
    const Mat g2 = Gamma2(ctx);
    CHECK(g2(0, 0) == doctest::Approx(5e5));
    CHECK(g2(1, 1) == doctest::Approx(5e5));
    CHECK(g2(0, 1) == 0.0);

    const Mat g1 = Gamma1(ctx);
    CHECK((g1 - g1.transpose()).cwiseAbs().maxCoeff() <= 1e-6 * g1.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Mat> es(g1);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("theoretical minimum standard deviation") {
    const ConstantDiffusion model;
    const LimitContext low = constant_context(model, 0.001);
    const LimitContext high = constant_context(model, 0.005);
    CHECK(theoretical_min_std(low, 5000) == doctest::Approx(0.044).epsilon(0.05));
    CHECK(theoretical_min_std(low, 1000) == doctest::Approx(0.066).epsilon(0.05));
    CHECK(theoretical_min_std(high, 5000) == doctest::Approx(0.066).epsilon(0.05));

    const Mat g1 = Gamma1(low);
    CHECK(std::abs(theoretical_min_std(low, g1, 1000) / theoretical_min_std(low, g1, 16000) - 2.0) < 1e-12);

    // Delta-method form for sigma1 * sigma3.
    const Mat inv = g1.inverse();
    const double s1 = 1.0, s3 = 0.5;
    const double var = s3 * s3 * inv(0, 0) + 2 * s1 * s3 * inv(0, 2) + s1 * s1 * inv(2, 2);
    CHECK(theoretical_min_std(low, g1, 5000) == doctest::Approx(std::pow(5000.0, -0.25) * std::sqrt(var)).epsilon(1e-12));

    CHECK_THROWS_AS(theoretical_min_std(low, Mat::Zero(3, 3), 1000), NumericalError);
}

TEST_CASE("quadrature convergence") {
    const ConstantDiffusion model;
    LimitContext ctx = constant_context(model, 0.001);
    const Vec s = (Vec(3) << 1.1, 0.8, 0.55).finished();
    const double coarse = Y1(ctx, s);
    ctx.quadrature_points *= 2;
    CHECK(std::abs(Y1(ctx, s) - coarse) <= 1e-8 * std::abs(coarse));

    // Time-varying densities use the quadrature; a smooth profile converges fast.
    ctx.density = [](double t) { return std::array<double, 2>{1.0 + 0.5 * std::sin(6.0 * t), 1.2 - 0.4 * t}; };
    ctx.quadrature_points = 256;
    const double d1 = Y1(ctx, s);
    ctx.quadrature_points = 512;
    CHECK(std::abs(Y1(ctx, s) - d1) <= 1e-8 * std::abs(d1));
    CHECK(Gamma2(ctx)(1, 1) == doctest::Approx(1.0 / (2.0 * 0.001 * 0.001)).epsilon(1e-10));

    const CirDiffusion cir;
    PathConfig path;
    path.model = CIR{};
    LimitContext c;
    c.model = &cir;
    c.sigma_star = fixtures::sigma_star();
    c.path = simulate_latent_path(path, 9);
    const double y_cir = Y1(c, s);
    c.quadrature_points *= 2;
    CHECK(std::abs(Y1(c, s) - y_cir) <= 1e-5 * std::abs(y_cir));
    CHECK(std::abs(Y1(c, c.sigma_star)) < 1e-12);
    Eigen::SelfAdjointEigenSolver<Mat> es(Gamma1(c));
    CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("context validation") {
    const ConstantDiffusion model;
    LimitContext ctx = constant_context(model, 0.001);
    ctx.v_star = {0.0, 0.001};
    CHECK_THROWS_AS(ctx.validate(), ConfigError);
    ctx = constant_context(model, 0.001);
    ctx.lambda = {1.0, -1.0};
    CHECK_THROWS_AS(ctx.validate(), ConfigError);
    const CirDiffusion cir;
    ctx = constant_context(cir, 0.001);
    ctx.model = &cir;
    CHECK_THROWS_AS(ctx.validate(), ConfigError);  // state-dependent without a path
}
