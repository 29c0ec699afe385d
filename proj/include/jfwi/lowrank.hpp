#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "jfwi/core.hpp"

namespace jfwi {

/// Forward-modelled simultaneous shots F*W (Nr x K) and the weights W (Ns x K)
/// that produced them.
struct SimulatedShots {
    CMatrix FW;
    RMatrix W;
};

/// Residual-constrained factorized completion of one frequency slice:
///
///   min 0.5||L||^2 + 0.5||R||^2
///   s.t. ||M .* T*(LR) - D_s||^2 + (lambda/2) ||FW - T*(LR) W||^2 <= epsilon
///
/// with L, R living in the midpoint-offset domain. lambda == 0 and no shots
/// is plain interpolation.
struct CompletionProblem {
    AcquisitionMask data;
    double lambda = 0.0;
    std::optional<SimulatedShots> shots;
    double epsilon = 0.0;
    Index rank_cap = 5;

    Index rows() const { return data.observed.data.rows(); }
    Index cols() const { return data.observed.data.cols(); }
    Index order() const { return rows() + cols() - 1; }

    /// Throws on inconsistent shapes or a lambda/shots mismatch.
    void validate() const;
};

struct FactorGradient {
    CMatrix gL;
    CMatrix gR;
};

struct ParetoPoint {
    double tau;
    double v;
};
using ParetoTrace = std::vector<ParetoPoint>;

struct SpgOptions {
    int max_iter = 200;
    int memory = 10;
    double sufficient_decrease = 1e-4;
    /// Stop once ||projected step|| <= step_tol * max(1, ||(L, R)||).
    double step_tol = 1e-12;
};

struct SpgLogRow {
    int iter;
    double tau;
    double v;
    double grad_norm;
};

struct LassoResult {
    Factorization F;
    double v = 0.0;
    int iterations = 0;
    /// Objective at every accepted iterate, starting with the projected start.
    std::vector<double> history;
    std::vector<SpgLogRow> log;
};

struct RootOptions {
    /// Converged when |v(tau) - epsilon| <= root_tol * epsilon.
    double root_tol = 1e-2;
    int max_root_iter = 10;
    SpgOptions spg;
};

enum class CompletionStatus { Converged, ZeroFeasible, BudgetTooTight, MaxIterations };
const char* to_string(CompletionStatus s);

struct CompletionResult {
    Factorization F;
    double v = 0.0;
    CompletionStatus status = CompletionStatus::MaxIterations;
    ParetoTrace trace;
    std::vector<SpgLogRow> log;
};

/// T*(L R): the source-receiver slice represented by a factor pair.
CMatrix completed_data(const CompletionProblem& p, const Factorization& f);

/// Exact left-hand side of the residual constraint.
double residual(const CompletionProblem& p, const Factorization& f);

/// Gradient of residual() in (L, R) under Re<.,.>: gL = T(Z) R^H, gR = L^H T(Z).
FactorGradient residual_gradient(const CompletionProblem& p, const Factorization& f);

/// Euclidean projection onto 0.5||L||^2 + 0.5||R||^2 <= tau (uniform rescale).
Factorization project_ball(Factorization f, double tau);

/// Spectral projected gradient on the tau-ball: BB1 steps with a
/// nonmonotone Armijo line search. Returns the best iterate seen and v(tau).
LassoResult solve_lasso(const CompletionProblem& p, double tau, const Factorization& start,
                        const SpgOptions& opt = {});

/// Finds tau with v(tau) = epsilon by safeguarded secant iteration, starting
/// from tau = 0 and tau = norm_sum(start). Each v evaluation warm-starts SPG.
CompletionResult solve_completion(const CompletionProblem& p, const Factorization& start,
                                  const RootOptions& opt = {});

/// Rank-k truncated SVD U S V^H of a midpoint-offset slice; L = U sqrt(S),
/// R = sqrt(S) V^H.
Factorization init_factors(const FrequencySlice& midoff_data, Index k);

Index default_rank_cap(Index ns, Index nr);

/// (rel * ||D_s||_F)^2
double default_epsilon(const AcquisitionMask& data, double rel = 1e-3);

/// CSV columns: iter,tau,v_tau,grad_norm
void write_convergence_csv(const std::filesystem::path& path, const std::vector<SpgLogRow>& log);

}  // namespace jfwi
