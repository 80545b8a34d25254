#include "bql/estimation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace bql {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// H_n is even in the model's sign-symmetric coordinates, so for a box that
// straddles zero in such a coordinate only |sigma_j| is identified. The search
// runs over [0, max(hi, -lo)] and maps back into the box.
struct Folding {
    Box original;
    Box search;
    std::vector<Eigen::Index> coords;

    Vec unfold(Vec s) const {
        for (Eigen::Index j : coords)
            if (s[j] > original.upper[j]) s[j] = -s[j];
        return s;
    }
    Vec fold(Vec s) const {
        for (Eigen::Index j : coords) s[j] = std::abs(s[j]);
        return s;
    }
};

Folding make_folding(const DiffusionModel& model, bool enable) {
    Folding f{model.box(), model.box(), {}};
    if (!enable) return f;
    for (Eigen::Index j : model.sign_symmetric_coordinates()) {
        const double lo = f.original.lower[j];
        const double hi = f.original.upper[j];
        if (lo < 0.0 && hi > 0.0) {
            f.coords.push_back(j);
            f.search.lower[j] = 0.0;
            f.search.upper[j] = std::max(hi, -lo);
        }
    }
    return f;
}

double log_sum_exp(const std::vector<double>& a) {
    double m = kNegInf;
    for (double x : a) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : a) s += std::exp(x - m);
    return m + std::log(s);
}

std::vector<double> trapezoid_weights(int n) {
    std::vector<double> w(static_cast<std::size_t>(n), 1.0);
    if (n > 1) w.front() = w.back() = 0.5;
    return w;
}

BayesResult grid_mean(const LogDensity& log_target, const Box& box, const Vec& mode, const Vec& scale,
                      const BayesOptions& opt) {
    const Eigen::Index d = box.dim();
    if (opt.grid_points < 2) throw ConfigError("grid_points must be at least 2");
    Vec lo(d), hi(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        lo[j] = std::max(box.lower[j], mode[j] - opt.width_sds * scale[j]);
        hi[j] = std::min(box.upper[j], mode[j] + opt.width_sds * scale[j]);
        if (hi[j] < lo[j]) lo[j] = hi[j] = std::clamp(mode[j], box.lower[j], box.upper[j]);
    }

    BayesResult res;
    res.method = "grid";
    for (int round = 0;; ++round) {
        std::vector<int> npts(static_cast<std::size_t>(d));
        std::vector<std::vector<double>> axis(static_cast<std::size_t>(d)), wts(static_cast<std::size_t>(d));
        std::size_t total = 1;
        for (Eigen::Index j = 0; j < d; ++j) {
            const int n = hi[j] > lo[j] ? opt.grid_points : 1;
            npts[j] = n;
            wts[j] = trapezoid_weights(n);
            for (int i = 0; i < n; ++i) axis[j].push_back(n == 1 ? lo[j] : lo[j] + (hi[j] - lo[j]) * i / (n - 1));
            total *= static_cast<std::size_t>(n);
        }

        std::vector<double> logw(total);
        std::vector<double> logt(total);
        std::vector<int> idx(static_cast<std::size_t>(d), 0);
        Vec x(d);
        for (std::size_t flat = 0; flat < total; ++flat) {
            double lw = 0.0;
            for (Eigen::Index j = 0; j < d; ++j) {
                x[j] = axis[j][idx[j]];
                lw += std::log(wts[j][idx[j]]);
            }
            double lt = kNegInf;
            try {
                lt = log_target(x);
            } catch (const Error&) {
                lt = kNegInf;
            }
            if (!std::isfinite(lt)) lt = kNegInf;
            logt[flat] = lt;
            logw[flat] = lw + lt;
            ++res.evaluations;
            for (Eigen::Index j = d - 1; j >= 0; --j) {
                if (++idx[j] < npts[j]) break;
                idx[j] = 0;
            }
        }
        const double top = *std::max_element(logt.begin(), logt.end());
        if (!std::isfinite(top)) throw NumericalError("posterior is not finite anywhere on the integration grid");

        // Grow any face that still carries non-negligible weight.
        bool grown = false;
        if (round < 6) {
            for (Eigen::Index j = 0; j < d; ++j) {
                if (npts[j] == 1) continue;
                double face_lo = kNegInf, face_hi = kNegInf;
                std::fill(idx.begin(), idx.end(), 0);
                for (std::size_t flat = 0; flat < total; ++flat) {
                    if (idx[j] == 0) face_lo = std::max(face_lo, logt[flat]);
                    if (idx[j] == npts[j] - 1) face_hi = std::max(face_hi, logt[flat]);
                    for (Eigen::Index k = d - 1; k >= 0; --k) {
                        if (++idx[k] < npts[k]) break;
                        idx[k] = 0;
                    }
                }
                const double span = hi[j] - lo[j];
                if (face_lo > top - 20.0 && lo[j] > box.lower[j]) {
                    lo[j] = std::max(box.lower[j], lo[j] - span);
                    grown = true;
                }
                if (face_hi > top - 20.0 && hi[j] < box.upper[j]) {
                    hi[j] = std::min(box.upper[j], hi[j] + span);
                    grown = true;
                }
            }
        }
        if (grown) continue;

        const double norm = log_sum_exp(logw);
        Vec mean = Vec::Zero(d);
        std::vector<double> mass(total);
        std::fill(idx.begin(), idx.end(), 0);
        for (std::size_t flat = 0; flat < total; ++flat) {
            const double p = std::exp(logw[flat] - norm);
            mass[flat] = p;
            for (Eigen::Index j = 0; j < d; ++j) mean[j] += p * axis[j][idx[j]];
            for (Eigen::Index j = d - 1; j >= 0; --j) {
                if (++idx[j] < npts[j]) break;
                idx[j] = 0;
            }
        }
        std::sort(mass.begin(), mass.end(), std::greater<>());
        double acc = 0.0;
        std::size_t cells = 0;
        while (cells < mass.size() && acc < 0.99) acc += mass[cells++];
        if (total > 1 && cells < 3)
            res.warnings.push_back("posterior mass is concentrated on fewer than 3 grid points; refine the grid");
        res.mean = mean;
        res.domain = Box(lo, hi);
        return res;
    }
}

BayesResult metropolis_mean(const LogDensity& log_target, const Box& box, const Vec& mode, const Vec& scale,
                            const BayesOptions& opt) {
    const Eigen::Index d = box.dim();
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    BayesResult res;
    res.method = "metropolis";
    res.domain = box;

    auto eval = [&](const Vec& x) {
        ++res.evaluations;
        if (!box.contains(x)) return kNegInf;
        try {
            const double v = log_target(x);
            return std::isfinite(v) ? v : kNegInf;
        } catch (const Error&) {
            return kNegInf;
        }
    };

    Vec x = box.project(mode);
    double lx = eval(x);
    if (!std::isfinite(lx)) throw NumericalError("posterior is not finite at the starting point");
    double c = 2.38 / std::sqrt(static_cast<double>(d));
    auto step = [&](long& accepted) {
        Vec y = x;
        for (Eigen::Index j = 0; j < d; ++j) y[j] += c * scale[j] * gauss(rng);
        const double ly = eval(y);
        if (std::isfinite(ly) && std::log(unif(rng)) < ly - lx) {
            x = y;
            lx = ly;
            ++accepted;
        }
    };

    const long batch = 500;
    for (long done = 0; done < opt.mcmc_burn_in; done += batch) {
        long acc = 0;
        const long n = std::min(batch, opt.mcmc_burn_in - done);
        for (long i = 0; i < n; ++i) step(acc);
        const double rate = static_cast<double>(acc) / static_cast<double>(n);
        if (rate < 0.2 || rate > 0.4) c *= std::exp(2.0 * (rate - 0.3));
    }
    long acc = 0;
    Vec sum = Vec::Zero(d);
    for (long i = 0; i < opt.mcmc_samples; ++i) {
        step(acc);
        sum += x;
    }
    res.mean = sum / static_cast<double>(std::max(1L, opt.mcmc_samples));
    res.acceptance = static_cast<double>(acc) / static_cast<double>(std::max(1L, opt.mcmc_samples));
    if (res.acceptance < 0.05 || res.acceptance > 0.8)
        res.warnings.push_back("Metropolis acceptance rate outside [0.05, 0.8]; the chain may mix poorly");
    return res;
}

nlohmann::json vec_json(const Vec& v) {
    auto a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

}  // namespace

NoiseVar estimate_noise_variance(const ObservationSet& obs) {
    NoiseVar v{};
    for (int k = 0; k < 2; ++k) {
        const auto& y = obs.y[k].values;
        if (y.size() < 2) throw DataError("noise variance needs at least 2 observations per component");
        double s = 0.0;
        for (std::size_t i = 1; i < y.size(); ++i) s += (y[i] - y[i - 1]) * (y[i] - y[i - 1]);
        v[k] = s / (2.0 * static_cast<double>(y.size() - 1));
    }
    return v;
}

NoiseVar plug_in_noise(const NoiseVar& v_hat, const Vec& sigma, const BlockData& blocks, const DiffusionModel& model) {
    std::array<double, 2> c{0.0, 0.0};
    if (model.state_independent()) {
        const Mat b = model.coefficient(0.0, blocks.blocks.front().xhat, sigma);
        c = {b.row(0).squaredNorm() * blocks.horizon, b.row(1).squaredNorm() * blocks.horizon};
    } else {
        for (const Block& blk : blocks.blocks) {
            const Mat b = model.coefficient(blk.s_lo, blk.xhat, sigma);
            const double dt = blk.s_hi - blk.s_lo;
            c[0] += b.row(0).squaredNorm() * dt;
            c[1] += b.row(1).squaredNorm() * dt;
        }
    }
    NoiseVar out{};
    for (int k = 0; k < 2; ++k) {
        if (blocks.J[k] < 1) throw DataError("plug-in correction needs at least one increment");
        out[k] = std::max(0.0, v_hat[k] - c[k] / (2.0 * static_cast<double>(blocks.J[k])));
    }
    return out;
}

MleResult mle(const QuasiLikelihood& ql, const NoiseVar& v, const MleOptions& opt) {
    const Folding fold = make_folding(ql.model(), opt.fold_symmetric);
    MleResult res;
    const Objective f = [&](const Vec& s, Vec* g) {
        const Evaluation ev = ql.evaluate(s, v, g != nullptr);
        res.jitter_events += ev.jitter_events;
        if (g) *g = ev.gradient;
        return ev.value;
    };
    const OptimizerResult r = maximize_in_box(f, fold.search, opt.optimizer);
    res.sigma = fold.unfold(r.x);
    res.value = r.value;
    res.evaluations = r.evaluations;
    res.iterations = r.iterations;
    res.restarts = r.restarts;
    res.failed_starts = r.failed_starts;
    return res;
}

Mat observed_info(const std::function<Vec(const Vec&)>& grad, const Vec& sigma, long bn) {
    const Mat h = central_hessian(grad, sigma);
    if (!h.allFinite()) throw NumericalError("Hessian of H_n is not finite");
    return -h / std::sqrt(static_cast<double>(bn));
}

Mat observed_info(const QuasiLikelihood& ql, const Vec& sigma, const NoiseVar& v) {
    return observed_info([&](const Vec& s) { return ql.gradient(s, v); }, sigma, ql.bn());
}

BayesResult posterior_mean(const LogDensity& log_target, const Box& box, const Vec& mode, const Vec& scale,
                           const BayesOptions& opt) {
    if (mode.size() != box.dim() || scale.size() != box.dim())
        throw DomainError("mode and scale must match the box dimension");
    if (box.dim() <= 3 && !opt.force_mcmc) return grid_mean(log_target, box, mode, scale, opt);
    return metropolis_mean(log_target, box, mode, scale, opt);
}

BayesResult bayes(const QuasiLikelihood& ql, const NoiseVar& v, const Prior& prior, const BayesOptions& opt,
                  const std::optional<Vec>& mode, const MleOptions& mle_opt) {
    const Folding fold = make_folding(ql.model(), mle_opt.fold_symmetric);
    const Box& lambda = fold.original;
    const auto nfold = fold.coords.size();

    // Prior of the folded variable: sum of the prior over sign patterns that stay in Lambda.
    auto folded_prior = [&](const Vec& s) {
        double total = 0.0;
        for (std::size_t mask = 0; mask < (std::size_t{1} << nfold); ++mask) {
            Vec r = s;
            bool duplicate = false;
            for (std::size_t b = 0; b < nfold; ++b) {
                if (!(mask >> b & 1U)) continue;
                if (r[fold.coords[b]] == 0.0) duplicate = true;
                r[fold.coords[b]] = -r[fold.coords[b]];
            }
            if (duplicate || !lambda.contains(r)) continue;
            total += prior ? prior(r) : 1.0;
        }
        return total;
    };
    const LogDensity log_target = [&](const Vec& s) {
        const double p = folded_prior(s);
        if (!(p > 0.0)) return kNegInf;
        return ql.value(s, v) + std::log(p);
    };

    Vec center = mode ? fold.fold(*mode) : fold.fold(mle(ql, v, mle_opt).sigma);
    center = fold.search.project(center);
    const Vec width = fold.search.width();
    Vec scale = 0.05 * width;
    const Mat info = -ql.hessian(center, v);
    Eigen::LLT<Mat> llt(info);
    if (llt.info() == Eigen::Success && info.allFinite()) {
        const Mat cov = llt.solve(Mat::Identity(info.rows(), info.cols()));
        for (Eigen::Index j = 0; j < scale.size(); ++j)
            if (cov(j, j) > 0.0) scale[j] = std::sqrt(cov(j, j));
    }
    for (Eigen::Index j = 0; j < scale.size(); ++j)
        scale[j] = std::clamp(scale[j], 1e-6 * (1.0 + std::abs(center[j])), std::max(width[j], 1e-6));

    BayesResult res = posterior_mean(log_target, fold.search, center, scale, opt);
    res.mean = fold.unfold(res.mean);
    return res;
}

std::pair<double, std::optional<double>> covariation_estimate(const QuasiLikelihood& ql, const Vec& sigma,
                                                              const Mat& gamma) {
    const auto [q, grad] = ql.covariation(sigma);
    Eigen::LLT<Mat> llt(gamma);
    if (llt.info() != Eigen::Success) return {q, std::nullopt};
    const double var = grad.dot(llt.solve(grad));
    return {q, std::pow(static_cast<double>(ql.bn()), -0.25) * std::sqrt(std::max(0.0, var))};
}

EstimateReport estimate_pipeline(const ObservationSet& obs, const DiffusionModel& model, const EstimateOptions& opt) {
    obs.validate();
    const BlockConfig cfg = opt.blocks ? *opt.blocks : BlockConfig::from_rule(BlockConfig::default_bn(obs));
    const BlockData blocks = build_blocks(obs, cfg);
    const QuasiLikelihood ql(blocks, model);
    if (ql.active_blocks() == 0) throw DataError("no non-degenerate block enters the likelihood");

    EstimateReport rep;
    rep.model = model.name();
    rep.bn = cfg.bn;
    rep.kn = cfg.kn;
    rep.horizon = blocks.horizon;
    rep.diagnostics.excluded_blocks = blocks.excluded_count;
    rep.diagnostics.active_blocks = ql.active_blocks();

    auto absorb = [&](const MleResult& r) {
        rep.diagnostics.iterations += r.iterations;
        rep.diagnostics.restarts += r.restarts;
        rep.diagnostics.evaluations += r.evaluations;
        rep.diagnostics.jitter_events += r.jitter_events;
        rep.diagnostics.failed_starts += r.failed_starts;
    };

    rep.v_hat = estimate_noise_variance(obs);
    const MleResult first = mle(ql, rep.v_hat, opt.mle);
    absorb(first);
    rep.sigma_first = first.sigma;
    rep.v_plugin = plug_in_noise(rep.v_hat, first.sigma, blocks, model);
    const MleResult second = mle(ql, rep.v_plugin, opt.mle);
    absorb(second);
    rep.sigma_hat = second.sigma;
    rep.h_value = second.value;

    rep.gamma_hat = observed_info(ql, rep.sigma_hat, rep.v_plugin);
    Eigen::LLT<Mat> llt(rep.gamma_hat);
    rep.gamma_positive_definite = llt.info() == Eigen::Success;
    if (rep.gamma_positive_definite) {
        const Mat inv = llt.solve(Mat::Identity(rep.gamma_hat.rows(), rep.gamma_hat.cols()));
        rep.stderr_sigma = std::pow(static_cast<double>(cfg.bn), -0.25) * inv.diagonal().cwiseMax(0.0).cwiseSqrt();
    } else {
        rep.diagnostics.warnings.push_back("observed information is not positive definite; standard errors omitted");
    }
    const auto [q, qse] = covariation_estimate(ql, rep.sigma_hat, rep.gamma_hat);
    rep.qcov = q;
    rep.qcov_stderr = qse;

    const Box& box = model.box();
    for (Eigen::Index j = 0; j < rep.sigma_hat.size(); ++j) {
        if (box.upper[j] > box.lower[j] &&
            (rep.sigma_hat[j] <= box.lower[j] || rep.sigma_hat[j] >= box.upper[j])) {
            rep.diagnostics.warnings.push_back("estimate lies on the boundary of the parameter box");
            break;
        }
    }

    if (opt.bayes) {
        BayesResult b = bayes(ql, rep.v_plugin, opt.prior, opt.bayes_options, rep.sigma_hat, opt.mle);
        rep.sigma_bayes = b.mean;
        for (auto& w : b.warnings) rep.diagnostics.warnings.push_back(std::move(w));
    }
    return rep;
}

std::string report_json(const EstimateReport& r, int indent) {
    nlohmann::json j;
    j["model"] = r.model;
    j["bn"] = r.bn;
    j["kn"] = r.kn;
    j["horizon"] = r.horizon;
    j["sigma_hat"] = vec_json(r.sigma_hat);
    j["sigma_first"] = vec_json(r.sigma_first);
    j["v_hat"] = {r.v_hat[0], r.v_hat[1]};
    j["v_plugin"] = {r.v_plugin[0], r.v_plugin[1]};
    j["sigma_bayes"] = r.sigma_bayes ? vec_json(*r.sigma_bayes) : nlohmann::json(nullptr);
    auto g = nlohmann::json::array();
    for (Eigen::Index i = 0; i < r.gamma_hat.rows(); ++i) g.push_back(vec_json(r.gamma_hat.row(i).transpose()));
    j["gamma_hat"] = g;
    j["gamma_positive_definite"] = r.gamma_positive_definite;
    j["stderr"] = r.stderr_sigma ? vec_json(*r.stderr_sigma) : nlohmann::json(nullptr);
    j["qcov"] = r.qcov;
    j["qcov_stderr"] = r.qcov_stderr ? nlohmann::json(*r.qcov_stderr) : nlohmann::json(nullptr);
    j["h_value"] = r.h_value;
    const auto& d = r.diagnostics;
    j["diagnostics"] = {{"iterations", d.iterations},           {"restarts", d.restarts},
                        {"evaluations", d.evaluations},         {"jitter_events", d.jitter_events},
                        {"failed_starts", d.failed_starts},     {"excluded_blocks", d.excluded_blocks},
                        {"active_blocks", d.active_blocks},     {"warnings", d.warnings}};
    return j.dump(indent);
}

}  // namespace bql
