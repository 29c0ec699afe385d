#pragma once

#include <functional>
#include <vector>

#include "jfwi/core.hpp"

namespace jfwi {

/// Returns f(x) and writes the gradient into g (already sized like x).
/// A non-finite f marks x as infeasible; the line search backs off.
using Objective = std::function<double(const RVector& x, RVector& g)>;

struct LbfgsOptions {
    int max_iter = 100;
    int memory = 10;
    double c1 = 1e-4;
    double c2 = 0.9;
    /// Stop once ||g|| <= gtol * max(1, ||g0||).
    double gtol = 1e-6;
    int max_evals_per_search = 30;
};

enum class LbfgsStatus { Converged, MaxIterations, LineSearchFailure };
const char* to_string(LbfgsStatus s);

struct LbfgsLogRow {
    int iter;
    double f;
    double grad_norm;
    double step;
    int evals;
};

struct LbfgsResult {
    RVector x;
    double f = 0.0;
    RVector g;
    LbfgsStatus status = LbfgsStatus::MaxIterations;
    int iterations = 0;
    int evaluations = 0;
    /// f at x0 and at every accepted iterate.
    std::vector<double> history;
    std::vector<LbfgsLogRow> log;
};

/// Limited-memory BFGS (two-loop recursion) with a strong Wolfe line search.
/// The first step is scaled to unit length; later ones start at alpha = 1
/// with H0 = (s'y / y'y) I. A failed line search ends the run and returns the
/// best point seen.
LbfgsResult lbfgs_minimize(const Objective& f, const RVector& x0, const LbfgsOptions& opt = {});

}  // namespace jfwi
