#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "jfwi/acquisition.hpp"
#include "jfwi/inversion.hpp"
#include "jfwi/lowrank.hpp"
#include "jfwi/probes.hpp"

namespace jfwi {

/// One observed frequency slice, optionally with the complete slice for scoring.
struct SliceData {
    AcquisitionMask observed;
    std::optional<CMatrix> truth;

    double omega() const { return observed.observed.omega; }
};

struct JointConfig {
    Survey survey;
    /// Angular frequencies per band, low to high. Every value must match the
    /// omega of one slice.
    std::vector<std::vector<double>> bands;
    RickerSource wavelet;
    Index num_probes = 4;
    ProbeDistribution distribution = ProbeDistribution::Gaussian;
    double lambda = 1.0;
    /// Residual budget per slice: (eps_rel * ||D_s||_F)^2.
    double eps_rel = 1e-3;
    /// 0 picks default_rank_cap(Ns, Nr).
    Index rank_cap = 0;
    /// Total over all bands, split as evenly as possible (earlier bands first).
    int outer_iters = 10;
    MSubproblemOptions msub;
    /// Completion solves of the disjoint stage 1.
    RootOptions root;
    /// Partial (L, R) update per joint outer iteration, warm-started.
    RootOptions joint_root = {1e-2, 3, {20}};
    std::uint64_t seed = 0;
    Boundary bc = Boundary::Absorbing;
    /// Scores model error in the history when present.
    std::optional<ModelGrid> truth;

    void validate(const std::vector<SliceData>& slices, const ModelGrid& m0) const;
};

struct IterationMetrics {
    int iter = 0;
    int band = 0;
    std::uint64_t probe_seed = 0;
    double phi0 = 0.0;
    double phi = 0.0;
    /// Sum over the band's slices of the completion residual before and
    /// after the (L, R) update, both at the current model.
    double completion_before = 0.0;
    double completion_after = 0.0;
    double model_error = std::numeric_limits<double>::quiet_NaN();
    /// Per slice (all of them, in slice order); NaN where no truth is known.
    std::vector<double> snr;
    int msub_evaluations = 0;
    std::uint64_t pde_count = 0;
    std::uint64_t pde_expected = 0;
    std::vector<CompletionStatus> completion_status;
    bool eps_relaxed = false;
    LbfgsStatus msub_status = LbfgsStatus::MaxIterations;
};

struct JointState {
    int k = 0;
    ModelGrid m;
    std::vector<Factorization> factors;
    /// Completed source-receiver slices (what the factors represent).
    std::vector<CMatrix> completed;
    ProbeBlock W;
    std::vector<IterationMetrics> history;
};

/// Helmholtz solves one outer iteration needs over `num_omegas` frequencies
/// when the model subproblem evaluates its oracle `evals` times. With
/// `fields_reused` the forward solves for FW are shared with the first
/// oracle call (joint); otherwise FW is not needed (stage-wise inversion).
std::uint64_t outer_iteration_pde_count(Index num_probes, std::size_t num_omegas, int evals,
                                        bool fields_reused);

/// Per-band model update: (band index, omegas, current model) -> new model.
using BandRunner =
    std::function<ModelGrid(std::size_t band, const std::vector<double>& omegas, const ModelGrid& m)>;

/// Runs `runner` over the bands in order, warm-starting each from the last.
/// Throws EmptySchedule for an empty band list.
ModelGrid frequency_continuation(const std::vector<std::vector<double>>& bands,
                                 const ModelGrid& m0, const BandRunner& runner);

/// Alternating stochastic block-coordinate descent over (L, R) per slice and m,
/// drawing fresh probes W^k = draw_probes(.., derive_seed(seed, k)) every
/// outer iteration k.
JointState joint_invert(const JointConfig& cfg, const std::vector<SliceData>& slices,
                        const ModelGrid& m0);

/// Stage-wise baseline: complete every slice with lambda = 0, then run
/// simultaneous_shot_fwi on the completed data.
JointState disjoint_invert(const JointConfig& cfg, const std::vector<SliceData>& slices,
                           const ModelGrid& m0);

/// Simultaneous-shot FWI with frequency continuation against complete slices
/// (stage 2 of the disjoint pipeline; the full-data baseline when `data`
/// holds the true slices). Uses the same probe-seed schedule as joint_invert.
JointState simultaneous_shot_fwi(const JointConfig& cfg, const std::vector<SliceData>& slices,
                                 const std::vector<CMatrix>& data, const ModelGrid& m0);

/// Iterations assigned to each band.
std::vector<int> split_iterations(int outer_iters, std::size_t num_bands);

}  // namespace jfwi
