#include "bql/profile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bql {

SymProfileMatrix::SymProfileMatrix(std::vector<int> first) {
    auto shape = std::make_shared<Shape>();
    shape->first = std::move(first);
    auto& f = shape->first;
    const int n = static_cast<int>(f.size());
    int running = n;
    for (int i = n - 1; i >= 0; --i) {
        f[i] = std::min(running, std::clamp(f[i], 0, i));
        running = f[i];
    }
    shape->ptr.resize(f.size() + 1, 0);
    for (int i = 0; i < n; ++i) shape->ptr[i + 1] = shape->ptr[i] + static_cast<std::size_t>(i - f[i] + 1);
    shape->last.resize(f.size());
    int k = 0;
    for (int j = 0; j < n; ++j) {
        k = std::max(k, j);
        while (k + 1 < n && f[k + 1] <= j) ++k;
        shape->last[j] = k;
    }
    data_.assign(shape->ptr.back(), 0.0);
    shape_ = std::move(shape);
}

int SymProfileMatrix::max_width() const {
    int w = 0;
    for (int i = 0; i < size(); ++i) w = std::max(w, i - first(i));
    return w;
}

void SymProfileMatrix::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

double SymProfileMatrix::operator()(int i, int j) const {
    if (i < j) std::swap(i, j);
    return j >= first(i) ? at(i, j) : 0.0;
}

double SymProfileMatrix::trace() const {
    double t = 0.0;
    for (int i = 0; i < size(); ++i) t += at(i, i);
    return t;
}

bool profile_cholesky(SymProfileMatrix& a) {
    const int n = a.size();
    std::vector<double> inv_diag(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int fi = a.first(i);
        double* ri = &a.at(i, fi);
        for (int j = fi; j < i; ++j) {
            const int fj = a.first(j);
            const int k0 = std::max(fi, fj);
            const double* rj = a.row(j);
            double s = ri[j - fi];
            for (int k = k0; k < j; ++k) s -= ri[k - fi] * rj[k - fj];
            ri[j - fi] = s * inv_diag[j];
        }
        double s = ri[i - fi];
        for (int k = fi; k < i; ++k) s -= ri[k - fi] * ri[k - fi];
        if (!(s > 0.0) || !std::isfinite(s)) return false;
        ri[i - fi] = std::sqrt(s);
        inv_diag[i] = 1.0 / ri[i - fi];
    }
    return true;
}

void profile_forward(const SymProfileMatrix& l, std::span<double> b) {
    for (int i = 0; i < l.size(); ++i) {
        const int fi = l.first(i);
        const double* ri = l.row(i);
        double s = b[i];
        for (int k = fi; k < i; ++k) s -= ri[k - fi] * b[k];
        b[i] = s / ri[i - fi];
    }
}

void profile_backward(const SymProfileMatrix& l, std::span<double> y) {
    for (int i = l.size() - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k <= l.last(i); ++k) s -= l.at(k, i) * y[k];
        y[i] = s / l.at(i, i);
    }
}

double profile_logdet(const SymProfileMatrix& l) {
    // Product of pivots with periodic renormalization; one log at the end.
    double mant = 1.0;
    long expo = 0;
    for (int i = 0; i < l.size(); ++i) {
        mant *= l.at(i, i);
        if ((i & 15) == 15) {
            int e = 0;
            mant = std::frexp(mant, &e);
            expo += e;
        }
    }
    return 2.0 * (std::log(mant) + static_cast<double>(expo) * std::numbers::ln2);
}

SymProfileMatrix profile_selected_inverse(const SymProfileMatrix& l) {
    SymProfileMatrix z = l;
    z.set_zero();
    // From L^T Z = L^{-1}: Z_ij = (delta_ij / L_jj - sum_{k>j} L_kj Z_ki) / L_jj, i >= j.
    // Every (k, i) touched below lies inside the profile because first() is nondecreasing.
    for (int j = l.size() - 1; j >= 0; --j) {
        const double ljj = l.at(j, j);
        const int kmax = l.last(j);
        for (int i = kmax; i > j; --i) {
            double s = 0.0;
            for (int k = j + 1; k <= kmax; ++k) s += l.at(k, j) * (k >= i ? z.at(k, i) : z.at(i, k));
            z.at(i, j) = -s / ljj;
        }
        double s = 0.0;
        for (int k = j + 1; k <= kmax; ++k) s += l.at(k, j) * z.at(k, j);
        z.at(j, j) = (1.0 / ljj - s) / ljj;
    }
    return z;
}

}  // namespace bql
