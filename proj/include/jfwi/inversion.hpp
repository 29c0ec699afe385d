#pragma once

#include <optional>
#include <vector>

#include "jfwi/acquisition.hpp"
#include "jfwi/helmholtz.hpp"
#include "jfwi/lbfgs.hpp"
#include "jfwi/probes.hpp"

namespace jfwi {

/// Simultaneous-shot misfit
///
///   phi(m) = sum_w 1/(2K) || P H_w(m)^-1 (amp_w Q W) - target_w ||_F^2
///
/// The 1/K makes phi with target = D W an unbiased estimate of the all-shot
/// misfit 1/2 ||P H^-1 Q - D||_F^2.
struct ShotMisfitSpec {
    /// Geometry only; the model comes in through the oracle argument.
    ModelGrid grid;
    Survey survey;
    std::vector<double> omegas;
    std::vector<double> amps;
    ProbeBlock probes;
    /// Nr x K per frequency. May be left empty for simulate_shots().
    std::vector<CMatrix> targets;
    Boundary bc = Boundary::Absorbing;

    Index num_probes() const { return probes.count(); }
    void validate(bool need_targets = true) const;
};

/// Wavefields U_w = H_w(m)^-1 (amp_w Q W) and their receiver samples P U_w.
struct SimulatedShotFields {
    RVector m;
    std::vector<CMatrix> U;
    std::vector<CMatrix> FW;
};

/// K forward solves per frequency.
SimulatedShotFields simulate_shots(const ShotMisfitSpec& spec, const RVector& m);

struct MisfitGradient {
    double phi = 0.0;
    RVector g;
};

/// phi(m) and its adjoint-state gradient with respect to squared slowness.
/// Per frequency: K forward and K adjoint solves sharing one LU. When
/// `reuse` holds fields for exactly this m, the forward solves are skipped.
MisfitGradient misfit_and_gradient(const ShotMisfitSpec& spec, const RVector& m,
                                   const SimulatedShotFields* reuse = nullptr);

struct MSubproblemOptions {
    int iter_cap = 5;
    int memory = 10;
    /// Optional squared-slowness box. The oracle is evaluated at the clamped
    /// model, so iterates never leave it. m0 must lie inside.
    std::optional<std::pair<double, double>> box;
};

struct MSubproblemResult {
    RVector m;
    double phi0 = 0.0;
    double phi = 0.0;
    LbfgsStatus status = LbfgsStatus::MaxIterations;
    int iterations = 0;
    int evaluations = 0;
    std::vector<LbfgsLogRow> log;
};

/// Partial L-BFGS solve of the model subproblem from m0. Works in the scaled
/// variable m / mean(m0) on phi / phi(m0); iter_cap = 0 returns m0 untouched
/// without solving anything.
MSubproblemResult solve_m_subproblem(const ShotMisfitSpec& spec, const RVector& m0,
                                     const MSubproblemOptions& opt = {},
                                     const SimulatedShotFields* reuse = nullptr);

}  // namespace jfwi
