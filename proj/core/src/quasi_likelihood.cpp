#include "bql/quasi_likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bql {

namespace {

constexpr double kJitterStart = 1e-12;
constexpr double kJitterMax = 1e-6;

NoiseVar floored(const NoiseVar& v) { return {std::max(v[0], kNoiseFloor), std::max(v[1], kNoiseFloor)}; }

LocalCovariance block_covariance(const DiffusionModel& model, const Block& b, const Vec& sigma) {
    return model.local_covariance(b.s_lo, b.xhat, sigma);
}

Mat dense_S(const Block& b, const LocalCovariance& lc, const NoiseVar& v) {
    const auto n1 = static_cast<Eigen::Index>(b.count[0]);
    const auto n2 = static_cast<Eigen::Index>(b.count[1]);
    Mat s = Mat::Zero(n1 + n2, n1 + n2);
    const std::array<double, 2> c{lc.c11, lc.c22};
    const std::array<Eigen::Index, 2> off{0, n1};
    const std::array<Eigen::Index, 2> len{n1, n2};
    for (int k = 0; k < 2; ++k) {
        for (Eigen::Index i = 0; i < len[k]; ++i) {
            s(off[k] + i, off[k] + i) = c[k] * b.lengths[k][static_cast<std::size_t>(i)] + 2.0 * v[k];
            if (i + 1 < len[k]) {
                s(off[k] + i, off[k] + i + 1) = -v[k];
                s(off[k] + i + 1, off[k] + i) = -v[k];
            }
        }
    }
    for (const Overlap& o : b.overlaps) {
        s(o.i, n1 + o.j) = lc.c12 * o.length;
        s(n1 + o.j, o.i) = lc.c12 * o.length;
    }
    return s;
}

}  // namespace

BlockCovariance assemble_S(const Block& block, const DiffusionModel& model, const Vec& sigma, const NoiseVar& v) {
    const LocalCovariance lc = block_covariance(model, block, sigma);
    BlockCovariance out;
    out.m = block.m;
    out.S = dense_S(block, lc, floored(v));
    const auto dim = out.S.rows();
    if (dim == 0) return out;
    const double scale = out.S.trace() / static_cast<double>(dim);
    double rel = 0.0;
    for (;;) {
        Mat a = out.S;
        if (rel > 0.0) a.diagonal().array() += rel * scale;
        Eigen::LLT<Mat> llt(a);
        if (llt.info() == Eigen::Success) {
            out.cholesky = llt.matrixL();
            out.logdet = 2.0 * out.cholesky.diagonal().array().log().sum();
            return out;
        }
        rel = rel == 0.0 ? kJitterStart : rel * 10.0;
        if (rel > kJitterMax * 1.0000001) throw NumericalError("S_m is not positive definite", block.m);
        ++out.jitter_steps;
    }
}

//----------------------------------------------------------------------------

QuasiLikelihood::QuasiLikelihood(const BlockData& blocks, const DiffusionModel& model)
    : blocks_(&blocks), model_(&model) {
    for (const Block* b : blocks.active()) prepared_.push_back(prepare(*b));
}

QuasiLikelihood::QuasiLikelihood(BlockData&& blocks, const DiffusionModel& model)
    : owned_(std::make_shared<const BlockData>(std::move(blocks))), blocks_(owned_.get()), model_(&model) {
    for (const Block* b : blocks_->active()) prepared_.push_back(prepare(*b));
}

int QuasiLikelihood::max_profile_width() const {
    int w = 0;
    for (const auto& p : prepared_) w = std::max(w, p.shape.max_width());
    return w;
}

QuasiLikelihood::Prepared QuasiLikelihood::prepare(const Block& b) const {
    Prepared p;
    p.block = &b;
    const int n1 = static_cast<int>(std::max(0L, b.count[0]));
    const int n2 = static_cast<int>(std::max(0L, b.count[1]));
    p.n = n1 + n2;

    // Merge both components by interval start; ties put component 1 first.
    std::vector<int> order(static_cast<std::size_t>(p.n));
    std::iota(order.begin(), order.end(), 0);
    auto start = [&](int r) { return r < n1 ? b.starts[0][r] : b.starts[1][r - n1]; };
    std::stable_sort(order.begin(), order.end(), [&](int a, int c) { return start(a) < start(c); });

    std::vector<int> row_of(static_cast<std::size_t>(p.n));
    p.comp.resize(order.size());
    p.length.resize(order.size());
    p.z.resize(order.size());
    for (int r = 0; r < p.n; ++r) {
        const int nat = order[r];
        row_of[nat] = r;
        const int k = nat < n1 ? 0 : 1;
        const int i = nat < n1 ? nat : nat - n1;
        p.comp[r] = static_cast<std::uint8_t>(k);
        p.length[r] = b.lengths[k][i];
        p.z[r] = b.increments[k][i];
    }

    std::vector<int> first(static_cast<std::size_t>(p.n));
    std::iota(first.begin(), first.end(), 0);
    auto link = [&](int a, int c, double value) {
        const int hi = std::max(row_of[a], row_of[c]);
        const int lo = std::min(row_of[a], row_of[c]);
        first[hi] = std::min(first[hi], lo);
        return Link{hi, lo, value};
    };
    for (int i = 0; i + 1 < n1; ++i) p.noise_links[0].push_back(link(i, i + 1, 0.0));
    for (int j = 0; j + 1 < n2; ++j) p.noise_links[1].push_back(link(n1 + j, n1 + j + 1, 0.0));
    for (const Overlap& o : b.overlaps) p.overlap_links.push_back(link(o.i, n1 + o.j, o.length));
    p.shape = SymProfileMatrix(std::move(first));
    return p;
}

void QuasiLikelihood::assemble(const Prepared& p, const LocalCovariance& lc, const NoiseVar& v, double jitter,
                               SymProfileMatrix& s) const {
    const std::array<double, 2> c{lc.c11, lc.c22};
    for (int r = 0; r < p.n; ++r) {
        const int k = p.comp[r];
        s.at(r, r) = c[k] * p.length[r] + 2.0 * v[k] + jitter;
    }
    for (int k = 0; k < 2; ++k)
        for (const Link& l : p.noise_links[k]) s.at(l.row, l.col) = -v[k];
    for (const Link& l : p.overlap_links) s.at(l.row, l.col) = lc.c12 * l.value;
}

int QuasiLikelihood::factor(const Prepared& p, const LocalCovariance& lc, const NoiseVar& v, SymProfileMatrix& s) const {
    // `s` arrives as a zeroed copy of the block's profile.
    assemble(p, lc, v, 0.0, s);
    const double scale = s.trace() / static_cast<double>(std::max(1, p.n));
    if (profile_cholesky(s)) return 0;
    int steps = 0;
    for (double rel = kJitterStart; rel <= kJitterMax * 1.0000001; rel *= 10.0) {
        ++steps;
        s.set_zero();
        assemble(p, lc, v, rel * scale, s);
        if (profile_cholesky(s)) return steps;
    }
    throw NumericalError("S_m is not positive definite", p.block->m);
}

Evaluation QuasiLikelihood::evaluate(const Vec& sigma, const NoiseVar& v_in, bool with_gradient) const {
    const NoiseVar v = floored(v_in);
    const Eigen::Index d = sigma.size();
    Evaluation ev;
    if (with_gradient) ev.gradient = Vec::Zero(d);
    std::vector<double> u;
    for (const Prepared& p : prepared_) {
        if (p.n == 0) continue;
        const LocalCovariance lc = block_covariance(*model_, *p.block, sigma);
        SymProfileMatrix s = p.shape;
        if (factor(p, lc, v, s) > 0) ++ev.jitter_events;

        u.assign(p.z.begin(), p.z.end());
        profile_forward(s, u);
        double quad = 0.0;
        for (double x : u) quad += x * x;
        ev.value += -0.5 * (quad + profile_logdet(s));
        if (!with_gradient) continue;

        profile_backward(s, u);  // u = S^{-1} z
        const SymProfileMatrix zinv = profile_selected_inverse(s);
        // dH/dc = -1/2 [ -u^T (dS/dc) u + tr(S^{-1} dS/dc) ]
        std::array<double, 2> g_diag{0.0, 0.0};
        for (int r = 0; r < p.n; ++r) {
            g_diag[p.comp[r]] += -0.5 * p.length[r] * (zinv.at(r, r) - u[r] * u[r]);
        }
        double g12 = 0.0;
        for (const Link& l : p.overlap_links) {
            g12 += -l.value * (zinv.at(l.row, l.col) - u[l.row] * u[l.col]);
        }
        ev.gradient += g_diag[0] * lc.dc11 + g_diag[1] * lc.dc22 + g12 * lc.dc12;
    }
    return ev;
}

Mat QuasiLikelihood::hessian(const Vec& sigma, const NoiseVar& v) const {
    return central_hessian([&](const Vec& s) { return gradient(s, v); }, sigma);
}

std::vector<std::pair<double, std::size_t>> QuasiLikelihood::quadratic_forms(const Vec& sigma,
                                                                             const NoiseVar& v_in) const {
    const NoiseVar v = floored(v_in);
    std::vector<std::pair<double, std::size_t>> out;
    std::vector<double> u;
    for (const Prepared& p : prepared_) {
        if (p.n == 0) continue;
        const LocalCovariance lc = block_covariance(*model_, *p.block, sigma);
        SymProfileMatrix s = p.shape;
        factor(p, lc, v, s);
        u.assign(p.z.begin(), p.z.end());
        profile_forward(s, u);
        double quad = 0.0;
        for (double x : u) quad += x * x;
        out.emplace_back(quad, static_cast<std::size_t>(p.n));
    }
    return out;
}

std::pair<double, Vec> QuasiLikelihood::covariation(const Vec& sigma) const {
    double q = 0.0;
    Vec g = Vec::Zero(sigma.size());
    for (const Block& b : blocks_->blocks) {
        const LocalCovariance lc = block_covariance(*model_, b, sigma);
        const double dt = b.s_hi - b.s_lo;
        q += lc.c12 * dt;
        g += lc.dc12 * dt;
    }
    return {q, g};
}

}  // namespace bql
