#include "bql/asymptotic_limits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace bql {

namespace {

// Composite Simpson over [0, T]; a constant integrand is evaluated once. With a
// latent path the integrand is piecewise constant in x on the path grid, so each
// path cell is integrated separately by the midpoint rule (split further when
// quadrature_points exceeds the number of cells).
template <class F>
double integrate(const LimitContext& ctx, F&& f) {
    if (ctx.time_homogeneous()) return f(0.0) * ctx.horizon;
    if (ctx.path && ctx.path->size() >= 2) {
        const auto& t = ctx.path->times;
        const std::size_t cells = t.size() - 1;
        const std::size_t split = std::max<std::size_t>(1, (static_cast<std::size_t>(ctx.quadrature_points) + cells - 1) / cells);
        double acc = 0.0;
        for (std::size_t i = 0; i < cells; ++i) {
            const double h = (t[i + 1] - t[i]) / static_cast<double>(split);
            for (std::size_t k = 0; k < split; ++k) acc += f(t[i] + (static_cast<double>(k) + 0.5) * h) * h;
        }
        return acc;
    }
    const int n = ctx.quadrature_points + ctx.quadrature_points % 2;
    const double h = ctx.horizon / n;
    double acc = f(0.0) + f(ctx.horizon);
    for (int i = 1; i < n; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * f(i * h);
    return acc * h / 3.0;
}

struct Moments {
    double c11, c22, c12, det;
};

Moments moments(const LimitContext& ctx, double t, const Vec& sigma) {
    const auto x = ctx.x(t);
    const Mat b = ctx.model->coefficient(t, x, sigma);
    Moments m{b.row(0).squaredNorm(), b.row(1).squaredNorm(), b.row(0).dot(b.row(1)), 0.0};
    m.det = m.c11 * m.c22 - m.c12 * m.c12;
    return m;
}

std::string at_time(double t) { return " at t = " + std::to_string(t); }

}  // namespace

void LimitContext::validate() const {
    if (!model) throw ConfigError("limit context needs a model");
    if (sigma_star.size() != model->dim()) throw ConfigError("sigma* has the wrong dimension");
    if (!(v_star[0] > 0.0 && v_star[1] > 0.0)) throw ConfigError("noise variances must be positive");
    if (!(lambda[0] > 0.0 && lambda[1] > 0.0)) throw ConfigError("sampling intensities must be positive");
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    if (quadrature_points < 2) throw ConfigError("quadrature_points must be at least 2");
    if (!model->state_independent() && !path) throw ConfigError("state-dependent model needs a latent path");
}

std::array<double, 2> LimitContext::a(double t) const { return density ? density(t) : lambda; }

std::array<double, 2> LimitContext::x(double t) const {
    if (!path) return {0.0, 0.0};
    const std::size_t i = path->index_at(t);
    return {path->values[0][i], path->values[1][i]};
}

bool LimitContext::time_homogeneous() const { return !density && model->state_independent(); }

double varphi(double x, double y) {
    if (x < 0.0 || y < 0.0) throw DomainError("varphi needs x >= 0 and y >= 0");
    double disc = x * x - 4.0 * y;
    if (disc < -1e-12 * x * x) throw DomainError("varphi needs 4y <= x^2");
    if (std::abs(disc) < 1e-14 * x * x || disc < 0.0) disc = 0.0;
    const double r = std::sqrt(disc);
    return std::sqrt(x + r) + std::sqrt(std::max(0.0, x - r));
}

double Y0(const LimitContext& ctx, const Vec& sigma) {
    ctx.validate();
    return -0.5 * integrate(ctx, [&](double t) {
        const Moments m = moments(ctx, t, sigma);
        const Moments s = moments(ctx, t, ctx.sigma_star);
        if (!(m.det > 0.0) || !(s.det > 0.0)) throw DomainError("b b^T is singular" + at_time(t));
        // tr((b b^T)^{-1} b* b*^T) with the 2x2 inverse written out.
        const double tr = (m.c22 * s.c11 - 2.0 * m.c12 * s.c12 + m.c11 * s.c22) / m.det;
        return tr - 2.0 + std::log(m.det / s.det);
    });
}

double Y1(const LimitContext& ctx, const Vec& sigma) {
    ctx.validate();
    const double rt8 = 2.0 * std::numbers::sqrt2;
    return integrate(ctx, [&](double t) {
        const Moments m = moments(ctx, t, sigma);
        const Moments s = moments(ctx, t, ctx.sigma_star);
        if (!(m.det > 0.0) || !(s.det > 0.0)) throw DomainError("b b^T is singular" + at_time(t));
        const auto a = ctx.a(t);
        const double a1 = a[0] / ctx.v_star[0];
        const double a2 = a[1] / ctx.v_star[1];
        const double ra = std::sqrt(a1 * a2);
        const double rdet = std::sqrt(m.det);
        double phi = 0.0, phi_star = 0.0;
        try {
            phi = varphi(a1 * m.c11 + a2 * m.c22, a1 * a2 * m.det);
            phi_star = varphi(a1 * s.c11 + a2 * s.c22, a1 * a2 * s.det);
        } catch (const DomainError& e) {
            throw DomainError(e.what() + at_time(t));
        }
        const double num = (m.c11 - s.c11) * (m.c22 * ra + a1 * rdet) + (m.c22 - s.c22) * (m.c11 * ra + a2 * rdet) -
                           2.0 * (m.c12 - s.c12) * m.c12 * ra;
        return num / (rt8 * rdet * phi) - (phi - phi_star) / rt8;
    });
}

double Y2(const LimitContext& ctx, const NoiseVar& v) {
    ctx.validate();
    if (!(v[0] > 0.0 && v[1] > 0.0)) throw DomainError("Y2 needs positive noise variances");
    const bool homogeneous = !ctx.density;
    auto f = [&](double t) {
        const auto a = ctx.a(t);
        double s = 0.0;
        for (int j = 0; j < 2; ++j) s += a[j] * (ctx.v_star[j] / v[j] - 1.0 + std::log(v[j] / ctx.v_star[j]));
        return s;
    };
    if (homogeneous) return -0.5 * f(0.0) * ctx.horizon;
    return -0.5 * integrate(ctx, f);
}

Mat Gamma1(const LimitContext& ctx) {
    ctx.validate();
    const Vec& s0 = ctx.sigma_star;
    const Eigen::Index d = s0.size();
    Vec h(d);
    for (Eigen::Index j = 0; j < d; ++j) h[j] = 1e-4 * (1.0 + std::abs(s0[j]));
    auto y = [&](Eigen::Index i, double si, Eigen::Index j, double sj) {
        Vec s = s0;
        s[i] += si * h[i];
        s[j] += sj * h[j];
        return Y1(ctx, s);
    };
    const double y0 = Y1(ctx, s0);
    Mat hess(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        Vec up = s0, dn = s0;
        up[i] += h[i];
        dn[i] -= h[i];
        hess(i, i) = (Y1(ctx, up) - 2.0 * y0 + Y1(ctx, dn)) / (h[i] * h[i]);
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = (y(i, 1, j, 1) - y(i, 1, j, -1) - y(i, -1, j, 1) + y(i, -1, j, -1)) / (4.0 * h[i] * h[j]);
            hess(i, j) = hess(j, i) = v;
        }
    }
    if (!hess.allFinite()) throw NumericalError("Gamma1 has non-finite entries");
    const Mat g = -hess;
    return 0.5 * (g + g.transpose());
}

Mat Gamma2(const LimitContext& ctx) {
    ctx.validate();
    Mat g = Mat::Zero(2, 2);
    for (int j = 0; j < 2; ++j) {
        const double int_a = ctx.density ? integrate(ctx, [&](double t) { return ctx.a(t)[j]; }) : ctx.lambda[j] * ctx.horizon;
        g(j, j) = int_a / (2.0 * ctx.v_star[j] * ctx.v_star[j]);
    }
    return g;
}

double theoretical_min_std(const LimitContext& ctx, long n) { return theoretical_min_std(ctx, Gamma1(ctx), n); }

double theoretical_min_std(const LimitContext& ctx, const Mat& gamma1, long n) {
    ctx.validate();
    if (n < 1) throw DomainError("n must be positive");
    const Eigen::Index d = ctx.sigma_star.size();
    Vec g = Vec::Zero(d);
    if (ctx.model->state_independent()) {
        g = ctx.model->local_covariance(0.0, ctx.x(0.0), ctx.sigma_star).dc12 * ctx.horizon;
    } else {
        for (Eigen::Index j = 0; j < d; ++j) {
            g[j] = integrate(ctx, [&](double t) { return ctx.model->local_covariance(t, ctx.x(t), ctx.sigma_star).dc12[j]; });
        }
    }
    Eigen::LLT<Mat> llt(gamma1);
    if (llt.info() != Eigen::Success) throw NumericalError("Gamma1 is not positive definite");
    return std::pow(static_cast<double>(n), -0.25) * std::sqrt(g.dot(llt.solve(g)));
}

}  // namespace bql
