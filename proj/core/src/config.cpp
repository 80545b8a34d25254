#include "bql/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace bql {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items())
        if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
T get(const json& j, const char* key, const T& fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
    }
}

std::array<double, 2> pair_of(const json& j, const char* key, std::array<double, 2> fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto v = get<std::vector<double>>(j, key, {}, where);
    if (v.size() != 2) throw ConfigError("'" + std::string(key) + "' in " + where + " needs 2 entries");
    return {v[0], v[1]};
}

Vec vec_of(const json& j, const char* key, const Vec& fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto v = get<std::vector<double>>(j, key, {}, where);
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

std::vector<std::string> RunConfig::validate() const {
    path.validate();
    sampling.validate();
    noise.validate();
    if (blocks) blocks->validate();
    if (model != "constant" && model != "cir") throw ConfigError("model must be 'constant' or 'cir'");
    if (box.dim() != 3) throw ConfigError("builtin models have 3 parameters; the box needs 3 bounds");
    if (replications < 1) throw ConfigError("replications must be at least 1");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (grid_points < 2) throw ConfigError("grid_points must be at least 2");
    if (quadrature_points < 2) throw ConfigError("quadrature_points must be at least 2");

    std::vector<std::string> warnings;
    Vec s = sigma_star();
    // sigma2 enters the model only through its square.
    Vec mirrored = s;
    mirrored[1] = -s[1];
    if (!box.contains(s) && !box.contains(mirrored)) warnings.push_back("true sigma lies outside the parameter box");
    const bool path_cir = std::holds_alternative<CIR>(path.model);
    if (path_cir != (model == "cir")) warnings.push_back("estimation model differs from the simulated latent model");
    return warnings;
}

std::unique_ptr<DiffusionModel> RunConfig::make_model() const { return bql::make_model(model, box); }

BlockConfig RunConfig::block_config() const { return blocks ? *blocks : BlockConfig::from_rule(sampling.n); }

EstimateOptions RunConfig::estimate_options() const {
    EstimateOptions opt;
    opt.blocks = block_config();
    opt.bayes = bayes;
    opt.bayes_options.grid_points = grid_points;
    return opt;
}

Vec RunConfig::sigma_star() const {
    return std::visit([](const auto& m) { return (Vec(3) << m.sigma1, m.sigma2, m.sigma3).finished(); }, path.model);
}

RunConfig parse_run_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(j, "config", {"path", "sampling", "noise", "blocks", "model", "estimation", "limits", "replications",
                             "master_seed", "workers", "description"});
    RunConfig cfg;

    if (j.contains("path")) {
        const json& p = j["path"];
        check_keys(p, "path", {"model", "sigma", "alpha", "beta", "y0", "horizon", "fine_grid_points"});
        const auto kind = get<std::string>(p, "model", "constant", "path");
        const Vec sigma = vec_of(p, "sigma", Vec(), "path");
        if (sigma.size() != 0 && sigma.size() != 3) throw ConfigError("path.sigma needs 3 entries");
        if (kind == "constant") {
            ConstantBM m;
            if (sigma.size() == 3) m = {sigma[0], sigma[1], sigma[2]};
            if (p.contains("alpha") || p.contains("beta") || p.contains("y0"))
                throw ConfigError("alpha, beta and y0 apply only to the CIR path");
            cfg.path.model = m;
        } else if (kind == "cir") {
            CIR m;
            if (sigma.size() == 3) {
                m.sigma1 = sigma[0];
                m.sigma2 = sigma[1];
                m.sigma3 = sigma[2];
            }
            const auto al = pair_of(p, "alpha", {m.alpha1, m.alpha2}, "path");
            const auto be = pair_of(p, "beta", {m.beta1, m.beta2}, "path");
            const auto y0 = pair_of(p, "y0", {m.y01, m.y02}, "path");
            m.alpha1 = al[0];
            m.alpha2 = al[1];
            m.beta1 = be[0];
            m.beta2 = be[1];
            m.y01 = y0[0];
            m.y02 = y0[1];
            cfg.path.model = m;
            cfg.model = "cir";
        } else {
            throw ConfigError("path.model must be 'constant' or 'cir'");
        }
        cfg.path.horizon = get<double>(p, "horizon", cfg.path.horizon, "path");
        cfg.path.fine_grid_points = get<std::size_t>(p, "fine_grid_points", cfg.path.fine_grid_points, "path");
    }

    if (j.contains("sampling")) {
        const json& s = j["sampling"];
        check_keys(s, "sampling", {"n", "lambda"});
        cfg.sampling.n = get<long>(s, "n", cfg.sampling.n, "sampling");
        cfg.sampling.lambda = pair_of(s, "lambda", cfg.sampling.lambda, "sampling");
    }

    if (j.contains("noise")) {
        const json& nz = j["noise"];
        check_keys(nz, "noise", {"kind", "variance", "shape", "scale"});
        const auto kind = get<std::string>(nz, "kind", "gaussian", "noise");
        if (kind == "gaussian") {
            if (nz.contains("shape") || nz.contains("scale")) throw ConfigError("shape/scale apply to centered_gamma noise");
            cfg.noise.kind = GaussianNoise{pair_of(nz, "variance", GaussianNoise{}.variance, "noise")};
        } else if (kind == "centered_gamma") {
            if (nz.contains("variance")) throw ConfigError("variance applies to gaussian noise");
            CenteredGammaNoise g;
            g.shape = pair_of(nz, "shape", g.shape, "noise");
            g.scale = pair_of(nz, "scale", g.scale, "noise");
            cfg.noise.kind = g;
        } else {
            throw ConfigError("noise.kind must be 'gaussian' or 'centered_gamma'");
        }
    }

    if (j.contains("blocks")) {
        const json& b = j["blocks"];
        if (b.is_string()) {
            if (b.get<std::string>() != "auto") throw ConfigError("blocks must be \"auto\" or an object");
        } else {
            check_keys(b, "blocks", {"bn", "kn"});
            if (!b.contains("bn")) throw ConfigError("blocks.bn is required");
            const long bn = get<long>(b, "bn", 1, "blocks");
            BlockConfig bc = BlockConfig::from_rule(bn);
            bc.kn = get<long>(b, "kn", bc.kn, "blocks");
            cfg.blocks = bc;
        }
    }

    if (j.contains("model")) {
        const json& m = j["model"];
        check_keys(m, "model", {"kind", "lower", "upper"});
        cfg.model = get<std::string>(m, "kind", cfg.model, "model");
        const Vec lo = vec_of(m, "lower", cfg.box.lower, "model");
        const Vec hi = vec_of(m, "upper", cfg.box.upper, "model");
        if (lo.size() != hi.size()) throw ConfigError("model.lower and model.upper differ in length");
        try {
            cfg.box = Box(lo, hi);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }

    if (j.contains("estimation")) {
        const json& e = j["estimation"];
        check_keys(e, "estimation", {"bayes", "baseline", "oracle_noise", "grid_points"});
        cfg.bayes = get<bool>(e, "bayes", cfg.bayes, "estimation");
        cfg.baseline = get<bool>(e, "baseline", cfg.baseline, "estimation");
        cfg.oracle_noise = get<bool>(e, "oracle_noise", cfg.oracle_noise, "estimation");
        cfg.grid_points = get<int>(e, "grid_points", cfg.grid_points, "estimation");
    }
    if (j.contains("limits")) {
        const json& l = j["limits"];
        check_keys(l, "limits", {"quadrature_points"});
        cfg.quadrature_points = get<int>(l, "quadrature_points", cfg.quadrature_points, "limits");
    }

    cfg.replications = get<long>(j, "replications", cfg.replications, "config");
    cfg.master_seed = get<std::uint64_t>(j, "master_seed", cfg.master_seed, "config");
    cfg.workers = get<int>(j, "workers", cfg.workers, "config");
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string run_config_json(const RunConfig& cfg, int indent) {
    json j;
    json p;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            p["sigma"] = {m.sigma1, m.sigma2, m.sigma3};
            if constexpr (std::is_same_v<T, CIR>) {
                p["model"] = "cir";
                p["alpha"] = {m.alpha1, m.alpha2};
                p["beta"] = {m.beta1, m.beta2};
                p["y0"] = {m.y01, m.y02};
            } else {
                p["model"] = "constant";
            }
        },
        cfg.path.model);
    p["horizon"] = cfg.path.horizon;
    p["fine_grid_points"] = cfg.path.fine_grid_points;
    j["path"] = p;
    j["sampling"] = {{"n", cfg.sampling.n}, {"lambda", cfg.sampling.lambda}};
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, GaussianNoise>) {
                j["noise"] = {{"kind", "gaussian"}, {"variance", k.variance}};
            } else {
                j["noise"] = {{"kind", "centered_gamma"}, {"shape", k.shape}, {"scale", k.scale}};
            }
        },
        cfg.noise.kind);
    if (cfg.blocks) {
        j["blocks"] = {{"bn", cfg.blocks->bn}, {"kn", cfg.blocks->kn}};
    } else {
        j["blocks"] = "auto";
    }
    j["model"] = {{"kind", cfg.model}, {"lower", vec_json(cfg.box.lower)}, {"upper", vec_json(cfg.box.upper)}};
    j["estimation"] = {{"bayes", cfg.bayes},
                       {"baseline", cfg.baseline},
                       {"oracle_noise", cfg.oracle_noise},
                       {"grid_points", cfg.grid_points}};
    j["limits"] = {{"quadrature_points", cfg.quadrature_points}};
    j["replications"] = cfg.replications;
    j["master_seed"] = cfg.master_seed;
    j["workers"] = cfg.workers;
    return j.dump(indent);
}

LimitContext limit_context(const RunConfig& cfg, const DiffusionModel& model, const std::optional<LatentPath>& path) {
    LimitContext ctx;
    ctx.model = &model;
    ctx.sigma_star = cfg.sigma_star();
    ctx.v_star = cfg.noise.variance();
    ctx.lambda = cfg.sampling.lambda;
    ctx.horizon = cfg.path.horizon;
    ctx.quadrature_points = cfg.quadrature_points;
    ctx.path = path;
    return ctx;
}

}  // namespace bql
