#include "bql/profile.hpp"

#include "bql/common.hpp"

#include <doctest.h>

#include <random>

using namespace bql;

namespace {

// Random SPD matrix with a prescribed sparsity pattern: each row i couples to a
// few earlier rows within distance `reach`.
SymProfileMatrix random_profile(int n, int reach, std::mt19937_64& rng, Mat& dense) {
    std::uniform_int_distribution<int> span(0, reach);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    std::vector<int> first(n);
    for (int i = 0; i < n; ++i) first[i] = i - span(rng);
    SymProfileMatrix a(first);
    dense = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = a.first(i); j < i; ++j) {
            const double x = (j - a.first(i)) % 2 == 0 ? val(rng) : 0.0;
            a.at(i, j) = x;
            dense(i, j) = dense(j, i) = x;
        }
    }
    for (int i = 0; i < n; ++i) {
        const double d = 2.0 * (i - a.first(i)) + 1.0 + 2.0 * reach;
        a.at(i, i) = d;
        dense(i, i) = d;
    }
    return a;
}

}  // namespace

TEST_CASE("profile is monotone and last() is its inverse") {
    SymProfileMatrix a(std::vector<int>{0, 0, 2, 1, 4, 2});
    CHECK(a.first(0) == 0);
    CHECK(a.first(1) == 0);
    CHECK(a.first(2) == 1);
    CHECK(a.first(3) == 1);
    CHECK(a.first(4) == 2);
    CHECK(a.first(5) == 2);
    CHECK(a.last(0) == 1);
    CHECK(a.last(1) == 3);
    CHECK(a.last(2) == 5);
    CHECK(a.last(5) == 5);
    CHECK(a.max_width() == 3);
}

TEST_CASE("cholesky, solves, log-determinant and selected inverse match dense algebra") {
    std::mt19937_64 rng(42);
    for (int n : {1, 2, 7, 40, 150}) {
        for (int reach : {0, 1, 3, 9}) {
            Mat dense;
            SymProfileMatrix a = random_profile(n, reach, rng, dense);
            CHECK(a.trace() == doctest::Approx(dense.trace()));
            REQUIRE(profile_cholesky(a));
            Eigen::LLT<Mat> llt(dense);
            const Mat l = llt.matrixL();
            for (int i = 0; i < n; ++i)
                for (int j = a.first(i); j <= i; ++j) CHECK(a.at(i, j) == doctest::Approx(l(i, j)).epsilon(1e-12));

            const double logdet = 2.0 * l.diagonal().array().log().sum();
            CHECK(profile_logdet(a) == doctest::Approx(logdet).epsilon(1e-12));

            std::vector<double> b(n);
            std::normal_distribution<double> g;
            for (double& x : b) x = g(rng);
            Vec rhs = Eigen::Map<Vec>(b.data(), n);
            profile_forward(a, b);
            profile_backward(a, b);
            const Vec x = llt.solve(rhs);
            for (int i = 0; i < n; ++i) CHECK(b[i] == doctest::Approx(x[i]).epsilon(1e-10));

            const Mat inv = dense.inverse();
            const SymProfileMatrix z = profile_selected_inverse(a);
            double err = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = z.first(i); j <= i; ++j) err = std::max(err, std::abs(z.at(i, j) - inv(i, j)));
            CHECK(err < 1e-12);
        }
    }
}

TEST_CASE("indefinite input is reported") {
    SymProfileMatrix a(std::vector<int>{0, 0});
    a.at(0, 0) = 1.0;
    a.at(1, 0) = 2.0;
    a.at(1, 1) = 1.0;
    CHECK_FALSE(profile_cholesky(a));
}

TEST_CASE("symmetric read outside the profile is zero") {
    SymProfileMatrix a(std::vector<int>{0, 1, 1});
    a.at(2, 1) = 5.0;
    CHECK(a(1, 2) == 5.0);
    CHECK(a(0, 2) == 0.0);
}
