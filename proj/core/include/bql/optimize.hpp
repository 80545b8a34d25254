#pragma once

// Bounded maximization: multi-start Nelder-Mead with box projection followed
// by a projected quasi-Newton polish that uses the gradient when available.

#include "bql/common.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace bql {

struct OptimizerOptions {
    int starts = 5;
    int max_iterations = 500;    // Nelder-Mead iterations per start
    double simplex_scale = 0.1;  // initial simplex edge as a fraction of the box width
    double ftol = 1e-9;          // relative spread of simplex values at which a start stops
    int polish_iterations = 100;
    double tie_tolerance = 1e-9;  // relative gap under which maxima count as equal
    std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

/// Objective to maximize. When `grad` is non-null it must be filled with the gradient.
/// May throw bql::Error; the point is then treated as infeasible.
using Objective = std::function<double(const Vec& x, Vec* grad)>;

struct OptimizerResult {
    Vec x;
    double value = 0.0;
    long evaluations = 0;
    long iterations = 0;  // Nelder-Mead plus polish iterations over all starts
    int restarts = 0;     // starts beyond the first
    int failed_starts = 0;
};

/// `count` points of a Latin hypercube design in `box`.
std::vector<Vec> latin_hypercube(const Box& box, int count, std::uint64_t seed);

/// Throws EstimationError if every start fails.
OptimizerResult maximize_in_box(const Objective& f, const Box& box, const OptimizerOptions& opt = {},
                                bool use_gradient = true);

}  // namespace bql
