#include "bql/common.hpp"

#include <cmath>

namespace bql {

Box::Box(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size()) {
        throw ConfigError("box bounds have different dimensions");
    }
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (!(lower[i] <= upper[i])) {
            throw ConfigError("box lower bound exceeds upper bound in coordinate " + std::to_string(i));
        }
    }
}

bool Box::contains(const Vec& x) const {
    if (x.size() != lower.size()) return false;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] < lower[i] || x[i] > upper[i]) return false;
    }
    return true;
}

Vec Box::project(const Vec& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Mat central_hessian(const std::function<Vec(const Vec&)>& grad, const Vec& x) {
    const Eigen::Index d = x.size();
    Mat h(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double step = 1e-4 * (1.0 + std::abs(x[j]));
        Vec up = x, dn = x;
        up[j] += step;
        dn[j] -= step;
        h.col(j) = (grad(up) - grad(dn)) / (2.0 * step);
    }
    return 0.5 * (h + h.transpose());
}

}  // namespace bql
