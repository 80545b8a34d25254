#pragma once

// Spectral facts about the noise covariance matrix M(l) = tridiag(-1, 2, -1):
// eigenvalues of aE + M(l), trace integrals I_p / I_{p,q}, the pivot
// sequences p_j(eps), p'_j(eps) and the entrywise inverse of eps E + M(l).

#include "bql/common.hpp"

#include <vector>

namespace bql::tridiag {

/// l x l matrix with 2 on the diagonal and -1 on the first off-diagonals.
Mat make_M(int l);

/// Eigenvalues a + 2(1 - cos(i pi / (l+1))), i = 1..l, ascending.
std::vector<double> eigs_M(double a, int l);

/// I_p(a) = int_0^pi (a + 2(1 - cos x))^{-p} dx. Closed form for p = 1, 2.
double I_p(int p, double a);

/// I_{p,q}(a,b) = int_0^pi (a + 2(1-cos x))^{-p} (b + 2(1-cos x))^{-q} dx.
double I_pq(int p, int q, double a, double b);

/// I_p through (-1)^{p-1}/(p-1)! d^{p-1}/da^{p-1} [pi / sqrt(a(4+a))]; p <= 3.
double I_p_by_derivative(int p, double a);

/// int_0^pi log(a + 2(1-cos x)) - log(b + 2(1-cos x)) dx in closed form.
double log_ratio_integral(double a, double b);

/// Same integral by adaptive quadrature.
double log_ratio_integral_quadrature(double a, double b);

/// p_+(eps) = 1 + eps/2 + sqrt(eps + eps^2/4), the fixed point of p -> 2 + eps - 1/p.
double p_plus(double eps);

/// Pivots of the LDL^T factorization of eps E + M(l) (p) and of the same
/// matrix with its (1,1) entry reduced by one (p').
struct PSequence {
    double eps = 0.0;
    std::vector<double> p;        // p_1 .. p_l
    std::vector<double> p_prime;  // p'_1 .. p'_l

    /// 1-based accessors.
    double at(int j) const { return p.at(static_cast<std::size_t>(j - 1)); }
    double prime_at(int j) const { return p_prime.at(static_cast<std::size_t>(j - 1)); }
};

PSequence p_sequences(double eps, int l);

/// (eps E + M(l))^{-1} assembled from the pivot products, no linear solve.
Mat inv_entries(double eps, int l);

/// Diagonal of (eps E + M(l))^{-1} through the cofactor ratio of pivot products.
std::vector<double> inv_diagonal_cofactor(double eps, int l);

}  // namespace bql::tridiag
