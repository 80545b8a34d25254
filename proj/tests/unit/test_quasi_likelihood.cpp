#include "bql/quasi_likelihood.hpp"

#include "fixtures.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <random>

using namespace bql;

namespace {

Vec random_sigma(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u1(0.5, 1.5), u2(-1.2, 1.2), u3(0.2, 0.9);
    Vec s(3);
    s << u1(rng), u2(rng), u3(rng);
    if (std::abs(s[1]) < 0.2) s[1] = 0.4;
    return s;
}

}  // namespace

TEST_CASE("banded evaluation agrees with the dense oracle") {
    ConstantDiffusion model;
    std::mt19937_64 rng(11);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto data = fixtures::constant_bm(200, 0.001, seed);
        const auto blocks = fixtures::blocks_for(data.observations, 200);
        QuasiLikelihood ql(blocks, model);
        REQUIRE(ql.active_blocks() > 0);
        for (int trial = 0; trial < 4; ++trial) {
            const Vec s = random_sigma(rng);
            const NoiseVar v{0.0005 + 0.002 * std::uniform_real_distribution<double>()(rng), 0.001};
            const double fast = ql.value(s, v);
            const double slow = oracle::naive_H(blocks, model, s, v);
            CHECK(std::abs(fast - slow) <= 1e-8 * std::abs(slow));
        }
    }
}

TEST_CASE("analytic gradient matches central differences") {
    CirDiffusion cir;
    ConstantDiffusion constant;
    std::mt19937_64 rng(5);
    const auto data = fixtures::constant_bm(400, 0.001, 9);
    const auto blocks = fixtures::blocks_for(data.observations, 400);
    for (const DiffusionModel* model : {static_cast<const DiffusionModel*>(&constant), static_cast<const DiffusionModel*>(&cir)}) {
        QuasiLikelihood ql(blocks, *model);
        for (int trial = 0; trial < 5; ++trial) {
            const Vec s = random_sigma(rng);
            const NoiseVar v{0.001, 0.002};
            const Vec g = ql.gradient(s, v);
            for (Eigen::Index j = 0; j < 3; ++j) {
                const double h = 1e-5 * (1.0 + std::abs(s[j]));
                Vec up = s, dn = s;
                up[j] += h;
                dn[j] -= h;
                const double fd = (ql.value(up, v) - ql.value(dn, v)) / (2.0 * h);
                CHECK(std::abs(g[j] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

TEST_CASE("dense assembly matches the oracle and is positive definite") {
    ConstantDiffusion model;
    const auto data = fixtures::constant_bm(500, 0.001, 4);
    const auto blocks = fixtures::blocks_for(data.observations, 500);
    for (const Block* b : blocks.active()) {
        const auto bc = assemble_S(*b, model, fixtures::sigma_star(), {0.001, 0.001});
        CHECK(bc.jitter_steps == 0);
        const Mat ref = oracle::naive_S(*b, model, fixtures::sigma_star(), {0.001, 0.001});
        CHECK((bc.S - ref).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((bc.cholesky * bc.cholesky.transpose() - bc.S).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("scalar block with unit noise") {
    Block b;
    b.m = 2;
    b.count = {1, 0};
    b.starts = {std::vector<double>{0.1}, {}};
    b.ends = {std::vector<double>{0.3}, {}};
    b.lengths = {std::vector<double>{0.2}, {}};
    b.increments = {std::vector<double>{0.0}, {}};
    b.xhat = {0.0, 0.0};
    ConstantDiffusion model;
    const Vec s = (Vec(3) << 2.0, 1.0, 0.5).finished();
    const auto bc = assemble_S(b, model, s, {1.0, 1.0});
    REQUIRE(bc.S.rows() == 1);
    CHECK(bc.S(0, 0) == doctest::Approx(4.0 * 0.2 + 2.0));
}

TEST_CASE("zero increments give minus half the log determinant") {
    ConstantDiffusion model;
    auto data = fixtures::constant_bm(200, 0.001, 21);
    for (auto& series : data.observations.y) std::fill(series.values.begin(), series.values.end(), 3.0);
    data.observations.covariates.clear();
    const auto blocks = fixtures::blocks_for(data.observations, 200);
    QuasiLikelihood ql(blocks, model);
    double expected = 0.0;
    for (const Block* b : blocks.active()) expected += -0.5 * assemble_S(*b, model, fixtures::sigma_star(), {0.001, 0.001}).logdet;
    CHECK(ql.value(fixtures::sigma_star(), {0.001, 0.001}) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("shift invariance") {
    ConstantDiffusion model;
    auto data = fixtures::constant_bm(300, 0.001, 8);
    const auto b0 = fixtures::blocks_for(data.observations, 300);
    const double h0 = QuasiLikelihood(b0, model).value(fixtures::sigma_star(), {0.001, 0.001});
    for (auto& v : data.observations.y[0].values) v += 17.0;
    for (auto& v : data.observations.y[1].values) v -= 4.0;
    const auto b1 = fixtures::blocks_for(data.observations, 300);
    const double h1 = QuasiLikelihood(b1, model).value(fixtures::sigma_star(), {0.001, 0.001});
    CHECK(h1 == doctest::Approx(h0).epsilon(1e-10));
}

TEST_CASE("mirrored data mirrors the third gradient coordinate") {
    ConstantDiffusion model;
    auto data = fixtures::constant_bm(300, 0.001, 13);
    const auto b0 = fixtures::blocks_for(data.observations, 300);
    for (auto& v : data.observations.y[1].values) v = -v;
    const auto b1 = fixtures::blocks_for(data.observations, 300);
    Vec s = fixtures::sigma_star();
    Vec mirrored = s;
    mirrored[2] = -s[2];
    const Vec g0 = QuasiLikelihood(b0, model).gradient(s, {0.001, 0.001});
    const Vec g1 = QuasiLikelihood(b1, model).gradient(mirrored, {0.001, 0.001});
    CHECK(g1[2] == doctest::Approx(-g0[2]).epsilon(1e-9));
    CHECK(g1[0] == doctest::Approx(g0[0]).epsilon(1e-9));
}

TEST_CASE("likelihood is even in the sign-symmetric coordinate") {
    ConstantDiffusion model;
    const auto data = fixtures::constant_bm(300, 0.001, 17);
    const auto blocks = fixtures::blocks_for(data.observations, 300);
    QuasiLikelihood ql(blocks, model);
    Vec s = fixtures::sigma_star();
    Vec f = s;
    f[1] = -s[1];
    CHECK(ql.value(f, {0.001, 0.001}) == doctest::Approx(ql.value(s, {0.001, 0.001})).epsilon(1e-12));
}

TEST_CASE("hessian is symmetric and negative definite near the truth") {
    ConstantDiffusion model;
    const auto data = fixtures::constant_bm(1000, 0.001, 3);
    const auto blocks = fixtures::blocks_for(data.observations, 1000);
    QuasiLikelihood ql(blocks, model);
    const Mat h = ql.hessian(fixtures::sigma_star(), {0.001, 0.001});
    CHECK((h - h.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    CHECK(es.eigenvalues().maxCoeff() < 0.0);
}

TEST_CASE("quadratic covariation functional of the constant model") {
    ConstantDiffusion model;
    const auto data = fixtures::constant_bm(200, 0.001, 1);
    const auto blocks = fixtures::blocks_for(data.observations, 200);
    QuasiLikelihood ql(blocks, model);
    const auto [q, g] = ql.covariation(fixtures::sigma_star());
    CHECK(q == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g[0] == doctest::Approx(0.5));
    CHECK(g[1] == doctest::Approx(0.0));
    CHECK(g[2] == doctest::Approx(1.0));
}
