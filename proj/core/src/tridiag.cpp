#include "bql/tridiag.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

namespace bql::tridiag {

namespace {

constexpr double kPi = boost::math::constants::pi<double>();
constexpr double kQuadTol = 1e-10;

template <class F>
double integrate_0_pi(F&& f) {
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, kPi, 25, kQuadTol, &err);
}

void require_size(int l) {
    if (l < 1) throw DomainError("matrix size must be >= 1");
}

}  // namespace

Mat make_M(int l) {
    require_size(l);
    Mat m = Mat::Zero(l, l);
    for (int i = 0; i < l; ++i) {
        m(i, i) = 2.0;
        if (i + 1 < l) {
            m(i, i + 1) = -1.0;
            m(i + 1, i) = -1.0;
        }
    }
    return m;
}

std::vector<double> eigs_M(double a, int l) {
    require_size(l);
    std::vector<double> out(static_cast<std::size_t>(l));
    for (int i = 1; i <= l; ++i) {
        out[i - 1] = a + 2.0 * (1.0 - std::cos(i * kPi / (l + 1)));
    }
    // 1 - cos is increasing on (0, pi), so the list is already ascending.
    return out;
}

double I_p(int p, double a) {
    if (!(a > 0.0)) throw DomainError("I_p requires a > 0");
    if (p < 1) throw DomainError("I_p requires p >= 1");
    if (p == 1) return kPi / std::sqrt(a * (4.0 + a));
    if (p == 2) return kPi * (2.0 + a) * std::pow(a, -1.5) * std::pow(4.0 + a, -1.5);
    return integrate_0_pi([&](double x) { return std::pow(a + 2.0 * (1.0 - std::cos(x)), -p); });
}

double I_pq(int p, int q, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("I_pq requires a, b > 0");
    if (p < 0 || q < 0) throw DomainError("I_pq requires p, q >= 0");
    return integrate_0_pi([&](double x) {
        const double c = 2.0 * (1.0 - std::cos(x));
        return std::pow(a + c, -p) * std::pow(b + c, -q);
    });
}

double I_p_by_derivative(int p, double a) {
    if (!(a > 0.0)) throw DomainError("I_p requires a > 0");
    const double u = a * (4.0 + a);
    switch (p) {
        case 1:
            return kPi / std::sqrt(u);
        case 2:
            return kPi * (a + 2.0) * std::pow(u, -1.5);
        case 3:
            return kPi * (a * a + 4.0 * a + 6.0) * std::pow(u, -2.5);
        default:
            throw DomainError("derivative form implemented for p <= 3 only");
    }
}

double log_ratio_integral(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("log-ratio integral requires a, b > 0");
    return 2.0 * kPi * (std::log(std::sqrt(a) + std::sqrt(4.0 + a)) - std::log(std::sqrt(b) + std::sqrt(4.0 + b)));
}

double log_ratio_integral_quadrature(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("log-ratio integral requires a, b > 0");
    return integrate_0_pi([&](double x) {
        const double c = 2.0 * (1.0 - std::cos(x));
        return std::log(a + c) - std::log(b + c);
    });
}

double p_plus(double eps) { return 1.0 + eps / 2.0 + std::sqrt(eps + eps * eps / 4.0); }

PSequence p_sequences(double eps, int l) {
    if (!(eps >= 0.0)) throw DomainError("p-sequences require eps >= 0");
    require_size(l);
    PSequence s;
    s.eps = eps;
    s.p.resize(static_cast<std::size_t>(l));
    s.p_prime.resize(static_cast<std::size_t>(l));
    s.p[0] = 2.0 + eps;
    s.p_prime[0] = 1.0 + eps;
    for (std::size_t j = 1; j < s.p.size(); ++j) {
        s.p[j] = 2.0 + eps - 1.0 / s.p[j - 1];
        s.p_prime[j] = 2.0 + eps - 1.0 / s.p_prime[j - 1];
    }
    return s;
}

Mat inv_entries(double eps, int l) {
    const PSequence s = p_sequences(eps, l);
    const auto n = static_cast<std::size_t>(l);
    // (eps E + M)^{-1} = U diag(1/p) U^T with U_{k,k'} = prod_{k<=i<k'} 1/p_i.
    // Its diagonal obeys d_k = 1/p_k + d_{k+1}/p_k^2, and for k < k' the
    // entry factors as U_{k,k'} d_{k'}.
    std::vector<double> d(n);
    d[n - 1] = 1.0 / s.p[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) d[k] = 1.0 / s.p[k] + d[k + 1] / (s.p[k] * s.p[k]);

    Mat inv(l, l);
    for (std::size_t kp = 0; kp < n; ++kp) {
        inv(kp, kp) = d[kp];
        double u = 1.0;
        for (std::size_t k = kp; k-- > 0;) {
            u /= s.p[k];
            inv(k, kp) = u * d[kp];
            inv(kp, k) = inv(k, kp);
        }
    }
    return inv;
}

std::vector<double> inv_diagonal_cofactor(double eps, int l) {
    const PSequence s = p_sequences(eps, l);
    const auto n = static_cast<std::size_t>(l);
    std::vector<double> logprod(n + 1, 0.0);  // logprod[j] = sum_{i<=j} log p_i
    for (std::size_t j = 0; j < n; ++j) logprod[j + 1] = logprod[j] + std::log(s.p[j]);
    std::vector<double> out(n);
    for (std::size_t k = 1; k <= n; ++k) {
        out[k - 1] = std::exp(logprod[k - 1] + logprod[n - k] - logprod[n]);
    }
    return out;
}

}  // namespace bql::tridiag
