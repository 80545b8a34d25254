#include "bql/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace bql {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Point {
    Vec x;
    double f = -kInf;
};

// Wraps the objective: counts calls, maps failures to -inf, remembers the best point.
class Tracker {
public:
    explicit Tracker(const Objective& f) : f_(f) {}

    double value(const Vec& x) { return call(x, nullptr); }
    double value_grad(const Vec& x, Vec& g) {
        g = Vec::Zero(x.size());
        return call(x, &g);
    }

    long evaluations() const { return evaluations_; }
    const Point& best() const { return best_; }

private:
    double call(const Vec& x, Vec* g) {
        ++evaluations_;
        double v = -kInf;
        try {
            v = f_(x, g);
        } catch (const Error&) {
            v = -kInf;
        }
        if (!std::isfinite(v)) v = -kInf;
        if (g && !g->allFinite()) v = -kInf;
        if (v > best_.f) best_ = {x, v};
        return v;
    }

    const Objective& f_;
    long evaluations_ = 0;
    Point best_;
};

Point nelder_mead(Tracker& t, const Box& box, const Vec& x0, const OptimizerOptions& opt, long& iterations) {
    const Eigen::Index d = box.dim();
    const Vec width = box.width();
    std::vector<Point> s(static_cast<std::size_t>(d + 1));
    s[0].x = box.project(x0);
    for (Eigen::Index j = 0; j < d; ++j) {
        Vec x = s[0].x;
        const double step = opt.simplex_scale * width[j];
        x[j] = x[j] + step <= box.upper[j] ? x[j] + step : x[j] - step;
        s[static_cast<std::size_t>(j + 1)].x = x;
    }
    for (auto& p : s) p.f = t.value(p.x);

    auto by_value = [](const Point& a, const Point& b) { return a.f > b.f; };
    for (int it = 0; it < opt.max_iterations; ++it) {
        std::stable_sort(s.begin(), s.end(), by_value);
        const Point& best = s.front();
        Point& worst = s.back();
        if (!std::isfinite(best.f)) return best;
        if (std::isfinite(worst.f) && best.f - worst.f <= opt.ftol * (1.0 + std::abs(best.f))) break;
        ++iterations;

        Vec c = Vec::Zero(d);
        for (std::size_t i = 0; i + 1 < s.size(); ++i) c += s[i].x;
        c /= static_cast<double>(d);

        Point r{box.project(c + (c - worst.x)), 0.0};
        r.f = t.value(r.x);
        if (r.f > best.f) {
            Point e{box.project(c + 2.0 * (r.x - c)), 0.0};
            e.f = t.value(e.x);
            worst = e.f > r.f ? e : r;
            continue;
        }
        if (r.f > s[s.size() - 2].f) {
            worst = r;
            continue;
        }
        Point k;
        if (r.f > worst.f) {
            k.x = box.project(c + 0.5 * (r.x - c));
        } else {
            k.x = box.project(c + 0.5 * (worst.x - c));
        }
        k.f = t.value(k.x);
        if (k.f > std::max(r.f, worst.f)) {
            worst = k;
            continue;
        }
        for (std::size_t i = 1; i < s.size(); ++i) {
            s[i].x = box.project(s[0].x + 0.5 * (s[i].x - s[0].x));
            s[i].f = t.value(s[i].x);
        }
    }
    std::stable_sort(s.begin(), s.end(), by_value);
    return s.front();
}

// Components of g that can move x without leaving the box.
Vec free_direction(const Box& box, const Vec& x, const Vec& g) {
    Vec out = g;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        if ((x[j] <= box.lower[j] && g[j] < 0.0) || (x[j] >= box.upper[j] && g[j] > 0.0)) out[j] = 0.0;
    }
    return out;
}

Point polish(Tracker& t, const Box& box, Point p, const OptimizerOptions& opt, long& iterations) {
    Vec g;
    double f = t.value_grad(p.x, g);
    if (!std::isfinite(f)) return p;
    p.f = f;
    const Eigen::Index d = box.dim();
    const double wmin = box.width().minCoeff();
    Mat B = Mat::Identity(d, d);
    const double gmax = g.cwiseAbs().maxCoeff();
    if (gmax > 0.0) B *= 0.01 * wmin / gmax;
    bool scaled = false;

    for (int it = 0; it < opt.polish_iterations; ++it) {
        const Vec pg = free_direction(box, p.x, g);
        if (pg.cwiseAbs().maxCoeff() == 0.0) break;
        Vec dir = free_direction(box, p.x, B * pg);
        if (pg.dot(dir) <= 0.0) {
            B = Mat::Identity(d, d) * (0.01 * wmin / pg.cwiseAbs().maxCoeff());
            dir = B * pg;
        }
        ++iterations;

        double step = 1.0;
        bool accepted = false;
        Vec xn, gn;
        double fn = -kInf;
        for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
            xn = box.project(p.x + step * dir);
            if ((xn - p.x).cwiseAbs().maxCoeff() == 0.0) break;
            fn = t.value_grad(xn, gn);
            if (std::isfinite(fn) && fn >= p.f + 1e-4 * g.dot(xn - p.x)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;

        const Vec s = xn - p.x;
        const Vec y = g - gn;  // gradient change of the minimized objective -f
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (!scaled) {
                B = Mat::Identity(d, d) * (sy / y.squaredNorm());
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Mat I = Mat::Identity(d, d);
            B = (I - rho * s * y.transpose()) * B * (I - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        const double gain = fn - p.f;
        p = {xn, fn};
        g = gn;
        if (gain <= 1e-14 * (1.0 + std::abs(fn))) break;
    }
    return p;
}

bool lex_less(const Vec& a, const Vec& b) {
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        if (a[j] < b[j]) return true;
        if (a[j] > b[j]) return false;
    }
    return false;
}

}  // namespace

std::vector<Vec> latin_hypercube(const Box& box, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Eigen::Index d = box.dim();
    std::vector<Vec> pts(static_cast<std::size_t>(count), Vec(d));
    std::vector<int> perm(static_cast<std::size_t>(count));
    for (Eigen::Index j = 0; j < d; ++j) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i < count; ++i) {
            const double u = (perm[i] + unif(rng)) / count;
            pts[i][j] = box.lower[j] + u * (box.upper[j] - box.lower[j]);
        }
    }
    return pts;
}

OptimizerResult maximize_in_box(const Objective& f, const Box& box, const OptimizerOptions& opt, bool use_gradient) {
    if (opt.starts < 1) throw ConfigError("optimizer needs at least one start");
    OptimizerResult res;

    // Fixed coordinates are removed from the search.
    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < box.dim(); ++j)
        if (box.upper[j] > box.lower[j]) free.push_back(j);
    if (free.empty()) {
        Tracker t(f);
        const double v = t.value(box.lower);
        if (!std::isfinite(v)) throw EstimationError("objective is not finite at the only admissible point");
        res.x = box.lower;
        res.value = v;
        res.evaluations = t.evaluations();
        return res;
    }

    const auto nf = static_cast<Eigen::Index>(free.size());
    Vec lo(nf), hi(nf);
    for (Eigen::Index k = 0; k < nf; ++k) {
        lo[k] = box.lower[free[k]];
        hi[k] = box.upper[free[k]];
    }
    const Box sub(lo, hi);
    auto embed = [&](const Vec& y) {
        Vec x = box.lower;
        for (Eigen::Index k = 0; k < nf; ++k) x[free[k]] = y[k];
        return x;
    };
    const Objective fsub = [&](const Vec& y, Vec* g) {
        if (!g) return f(embed(y), nullptr);
        Vec full = Vec::Zero(box.dim());
        const double v = f(embed(y), &full);
        for (Eigen::Index k = 0; k < nf; ++k) (*g)[k] = full[free[k]];
        return v;
    };
    Tracker ts(fsub);

    std::vector<Point> candidates;
    for (const Vec& x0 : latin_hypercube(sub, opt.starts, opt.seed)) {
        Point p = nelder_mead(ts, sub, x0, opt, res.iterations);
        if (!std::isfinite(p.f)) {
            ++res.failed_starts;
            continue;
        }
        if (use_gradient) p = polish(ts, sub, p, opt, res.iterations);
        candidates.push_back(p);
    }
    res.restarts = opt.starts - 1;
    res.evaluations = ts.evaluations();
    if (candidates.empty()) throw EstimationError("every optimizer start failed");

    // The best point ever visited also competes, so nothing probed beats the answer.
    candidates.push_back(ts.best());
    double top = -kInf;
    for (const auto& c : candidates) top = std::max(top, c.f);
    const double tol = opt.tie_tolerance * (1.0 + std::abs(top));
    const Point* chosen = nullptr;
    for (const auto& c : candidates) {
        if (c.f < top - tol) continue;
        if (!chosen || lex_less(c.x, chosen->x)) chosen = &c;
    }
    res.x = embed(chosen->x);
    res.value = chosen->f;
    return res;
}

}  // namespace bql
