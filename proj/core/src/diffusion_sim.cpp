#include "bql/diffusion_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace bql {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Sub-stream identifiers for simulate_dataset.
constexpr std::uint64_t kPathStream = 1;
constexpr std::uint64_t kTimes1Stream = 2;
constexpr std::uint64_t kTimes2Stream = 3;
constexpr std::uint64_t kNoiseStream = 4;

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

void PathConfig::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive");
    if (fine_grid_points < 2) throw ConfigError("fine_grid_points must be at least 2");
    std::visit(Overloaded{
                   [](const ConstantBM& m) {
                       // sigma3 = 0 (uncorrelated components) is a valid data generator even
                       // though it lies on the boundary of the estimation box.
                       if (!(m.sigma1 > 0.0) || !(m.sigma3 >= 0.0)) {
                           throw ConfigError("ConstantBM requires sigma1 > 0 and sigma3 >= 0");
                       }
                       if (!std::isfinite(m.sigma2)) throw ConfigError("ConstantBM sigma2 must be finite");
                   },
                   [](const CIR& m) {
                       if (!(2.0 * m.alpha1 > m.sigma1 * m.sigma1)) {
                           throw ConfigError("CIR requires 2*alpha1 > sigma1^2");
                       }
                       if (!(2.0 * m.alpha2 > m.sigma2 * m.sigma2 + m.sigma3 * m.sigma3)) {
                           throw ConfigError("CIR requires 2*alpha2 > sigma2^2 + sigma3^2");
                       }
                       if (!(m.y01 > 0.0) || !(m.y02 > 0.0)) throw ConfigError("CIR initial values must be positive");
                   },
               },
               model);
}

void SamplingConfig::validate() const {
    if (n < 1) throw ConfigError("sampling frequency n must be >= 1");
    for (double l : lambda) {
        if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("Poisson intensities must be positive");
    }
}

void NoiseConfig::validate() const {
    std::visit(Overloaded{
                   [](const GaussianNoise& g) {
                       for (double v : g.variance) {
                           if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("noise variance must be >= 0");
                       }
                   },
                   [](const CenteredGammaNoise& g) {
                       for (int k = 0; k < 2; ++k) {
                           if (!(g.shape[k] > 0.0) || !(g.scale[k] > 0.0)) {
                               throw ConfigError("gamma shape and scale must be positive");
                           }
                       }
                   },
               },
               kind);
}

std::array<double, 2> NoiseConfig::variance() const {
    return std::visit(Overloaded{
                          [](const GaussianNoise& g) { return g.variance; },
                          [](const CenteredGammaNoise& g) {
                              return std::array<double, 2>{g.shape[0] * g.scale[0] * g.scale[0],
                                                           g.shape[1] * g.scale[1] * g.scale[1]};
                          },
                      },
                      kind);
}

std::size_t LatentPath::index_at(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 0;
    return static_cast<std::size_t>(std::distance(times.begin(), it)) - 1;
}

std::vector<Series> ObservationSet::covariate_streams() const {
    if (!covariates.empty()) return covariates;
    return {y[0], y[1]};
}

void ObservationSet::validate() const {
    if (!(horizon > 0.0)) throw DataError("observation horizon must be positive");
    auto check = [&](const Series& s, const std::string& name) {
        if (s.times.size() != s.values.size()) throw DataError(name + ": times and values differ in length");
        for (std::size_t i = 0; i < s.times.size(); ++i) {
            if (!(s.times[i] >= 0.0 && s.times[i] <= horizon)) {
                throw DataError(name + ": time outside [0,T] at index " + std::to_string(i));
            }
            if (i > 0 && !(s.times[i] > s.times[i - 1])) {
                throw DataError(name + ": times not strictly increasing at index " + std::to_string(i));
            }
        }
    };
    check(y[0], "component 1");
    check(y[1], "component 2");
    for (std::size_t k = 0; k < covariates.size(); ++k) check(covariates[k], "covariate " + std::to_string(k + 1));
}

LatentPath simulate_latent_path(const PathConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const std::size_t npts = cfg.fine_grid_points;
    const double dt = cfg.horizon / static_cast<double>(npts - 1);
    const double sqdt = std::sqrt(dt);

    LatentPath path;
    path.model = cfg.model;
    path.horizon = cfg.horizon;
    path.times.resize(npts);
    for (std::size_t i = 0; i < npts; ++i) path.times[i] = cfg.horizon * static_cast<double>(i) / static_cast<double>(npts - 1);
    path.times.back() = cfg.horizon;
    path.values[0].resize(npts);
    path.values[1].resize(npts);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::visit(Overloaded{
                   [&](const ConstantBM& m) {
                       double y1 = 0.0, y2 = 0.0;
                       path.values[0][0] = y1;
                       path.values[1][0] = y2;
                       for (std::size_t i = 1; i < npts; ++i) {
                           const double dw1 = sqdt * normal(rng);
                           const double dw2 = sqdt * normal(rng);
                           y1 += m.sigma1 * dw1;
                           y2 += m.sigma3 * dw1 + m.sigma2 * dw2;
                           path.values[0][i] = y1;
                           path.values[1][i] = y2;
                       }
                   },
                   [&](const CIR& m) {
                       double y1 = m.y01, y2 = m.y02;
                       path.values[0][0] = y1;
                       path.values[1][0] = y2;
                       for (std::size_t i = 1; i < npts; ++i) {
                           const double dw1 = sqdt * normal(rng);
                           const double dw2 = sqdt * normal(rng);
                           const double r1 = std::sqrt(y1);
                           const double r2 = std::sqrt(y2);
                           // Euler step reflected at zero.
                           y1 = std::abs(y1 + (m.alpha1 - m.beta1 * y1) * dt + m.sigma1 * r1 * dw1);
                           y2 = std::abs(y2 + (m.alpha2 - m.beta2 * y2) * dt + r2 * (m.sigma3 * dw1 + m.sigma2 * dw2));
                           path.values[0][i] = y1;
                           path.values[1][i] = y2;
                       }
                   },
               },
               cfg.model);
    return path;
}

std::vector<double> sample_poisson_times(double lambda, long n, double horizon, std::uint64_t seed) {
    if (!(lambda > 0.0)) throw ConfigError("Poisson intensity must be positive");
    if (n < 1) throw ConfigError("sampling frequency n must be >= 1");
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");

    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gap(lambda * static_cast<double>(n));
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(lambda * static_cast<double>(n) * horizon * 1.2) + 16);
    times.push_back(0.0);
    double t = 0.0;
    for (;;) {
        t += gap(rng);
        if (t >= horizon) break;
        times.push_back(t);
    }
    // The first arrival beyond T is truncated to T.
    times.push_back(horizon);
    return times;
}

ObservationSet observe(const LatentPath& path, const std::array<std::vector<double>, 2>& times,
                       const NoiseConfig& noise, std::uint64_t seed) {
    noise.validate();
    if (path.times.empty()) throw DataError("empty latent path");
    ObservationSet obs;
    obs.horizon = path.horizon;

    for (int k = 0; k < 2; ++k) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
        Series& s = obs.y[k];
        s.times = times[k];
        s.values.resize(s.times.size());
        for (std::size_t i = 0; i < s.times.size(); ++i) {
            const double t = s.times[i];
            if (!(t >= 0.0 && t <= path.horizon)) {
                throw DomainError("sampling time outside [0,T]: " + format_double(t));
            }
            s.values[i] = path.values[k][path.index_at(t)];
        }
        std::visit(Overloaded{
                       [&](const GaussianNoise& g) {
                           if (g.variance[k] == 0.0) return;
                           std::normal_distribution<double> eps(0.0, std::sqrt(g.variance[k]));
                           for (double& v : s.values) v += eps(rng);
                       },
                       [&](const CenteredGammaNoise& g) {
                           std::gamma_distribution<double> gam(g.shape[k], g.scale[k]);
                           const double mean = g.shape[k] * g.scale[k];
                           for (double& v : s.values) v += gam(rng) - mean;
                       },
                   },
                   noise.kind);
    }
    return obs;
}

double true_quadratic_covariation(const LatentPath& path) {
    return std::visit(Overloaded{
                          [&](const ConstantBM& m) { return m.sigma1 * m.sigma3 * path.horizon; },
                          [&](const CIR& m) {
                              double acc = 0.0;
                              for (std::size_t i = 0; i + 1 < path.size(); ++i) {
                                  const double dt = path.times[i + 1] - path.times[i];
                                  acc += std::sqrt(path.values[0][i] * path.values[1][i]) * dt;
                              }
                              return m.sigma1 * m.sigma3 * acc;
                          },
                      },
                      path.model);
}

SimulatedDataset simulate_dataset(const PathConfig& path_cfg, const SamplingConfig& sampling,
                                  const NoiseConfig& noise, std::uint64_t seed) {
    sampling.validate();
    SimulatedDataset ds;
    ds.path = simulate_latent_path(path_cfg, mix_seed(seed, kPathStream));
    std::array<std::vector<double>, 2> times{
        sample_poisson_times(sampling.lambda[0], sampling.n, path_cfg.horizon, mix_seed(seed, kTimes1Stream)),
        sample_poisson_times(sampling.lambda[1], sampling.n, path_cfg.horizon, mix_seed(seed, kTimes2Stream)),
    };
    ds.observations = observe(ds.path, times, noise, mix_seed(seed, kNoiseStream));
    ds.observations.n = sampling.n;
    ds.true_qcov = true_quadratic_covariation(ds.path);
    return ds;
}

//----------------------------------------------------------------------------
// CSV
//----------------------------------------------------------------------------

void write_observations_csv(std::ostream& out, const ObservationSet& obs) {
    out << "# horizon=" << format_double(obs.horizon) << '\n';
    if (obs.n) out << "# n=" << *obs.n << '\n';
    out << "component,index,time,value\n";
    auto rows = [&](const Series& s, const std::string& comp) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            out << comp << ',' << i << ',' << format_double(s.times[i]) << ',' << format_double(s.values[i]) << '\n';
        }
    };
    rows(obs.y[0], "1");
    rows(obs.y[1], "2");
    for (std::size_t k = 0; k < obs.covariates.size(); ++k) rows(obs.covariates[k], "x" + std::to_string(k + 1));
}

namespace {

double parse_number(const std::string& field, long line, const char* what) {
    if (field.empty()) throw ParseError(std::string("empty ") + what, line);
    char* end = nullptr;
    const double x = std::strtod(field.c_str(), &end);
    if (end != field.c_str() + field.size() || !std::isfinite(x)) {
        throw ParseError(std::string("invalid ") + what + " '" + field + "'", line);
    }
    return x;
}

long parse_index(const std::string& field, long line) {
    if (field.empty()) throw ParseError("empty index", line);
    char* end = nullptr;
    const long x = std::strtol(field.c_str(), &end, 10);
    if (end != field.c_str() + field.size() || x < 0) throw ParseError("invalid index '" + field + "'", line);
    return x;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

ObservationSet read_observations_csv(std::istream& in) {
    ObservationSet obs;
    std::optional<double> horizon;
    // component key -> (index -> (time, value))
    std::map<std::string, std::map<long, std::pair<double, double>>> rows;
    std::string line;
    long lineno = 0;
    bool header_seen = false;

    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string meta = trim(line.substr(1));
            const auto eq = meta.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = trim(meta.substr(0, eq));
            const std::string val = trim(meta.substr(eq + 1));
            if (key == "horizon") {
                horizon = parse_number(val, lineno, "horizon");
            } else if (key == "n") {
                obs.n = parse_index(val, lineno);
            }
            continue;
        }
        if (!header_seen) {
            if (line != "component,index,time,value") {
                throw ParseError("expected header 'component,index,time,value'", lineno);
            }
            header_seen = true;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(trim(f));
        if (fields.size() != 4) throw ParseError("expected 4 fields, got " + std::to_string(fields.size()), lineno);
        const std::string& comp = fields[0];
        const bool is_y = comp == "1" || comp == "2";
        const bool is_x = comp.size() >= 2 && comp[0] == 'x' &&
                          std::all_of(comp.begin() + 1, comp.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
                          comp[1] != '0';
        if (!is_y && !is_x) throw ParseError("unknown component '" + comp + "'", lineno);
        const long idx = parse_index(fields[1], lineno);
        const double t = parse_number(fields[2], lineno, "time");
        const double v = parse_number(fields[3], lineno, "value");
        auto& bucket = rows[comp];
        if (!bucket.emplace(idx, std::make_pair(t, v)).second) {
            throw ParseError("duplicate index " + std::to_string(idx) + " for component " + comp, lineno);
        }
    }
    if (!header_seen) throw ParseError("missing header", lineno + 1);

    auto to_series = [&](const std::string& comp) {
        Series s;
        auto it = rows.find(comp);
        if (it == rows.end()) return s;
        long expect = 0;
        for (const auto& [idx, tv] : it->second) {
            if (idx != expect) {
                throw ParseError("component " + comp + " is missing index " + std::to_string(expect), lineno);
            }
            ++expect;
            s.times.push_back(tv.first);
            s.values.push_back(tv.second);
        }
        return s;
    };
    obs.y[0] = to_series("1");
    obs.y[1] = to_series("2");
    for (long k = 1;; ++k) {
        const std::string key = "x" + std::to_string(k);
        if (!rows.count(key)) break;
        obs.covariates.push_back(to_series(key));
    }

    if (horizon) {
        obs.horizon = *horizon;
    } else {
        double tmax = 0.0;
        for (const auto& s : obs.y) {
            if (!s.times.empty()) tmax = std::max(tmax, s.times.back());
        }
        obs.horizon = tmax > 0.0 ? tmax : 1.0;
    }
    obs.validate();
    return obs;
}

}  // namespace bql
