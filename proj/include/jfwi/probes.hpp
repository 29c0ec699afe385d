#pragma once

#include <cstdint>
#include <utility>

#include "jfwi/core.hpp"

namespace jfwi {

enum class ProbeDistribution { Gaussian, Rademacher };

/// Ns x K block of simultaneous-shot weights with E[w w^T] = I per column.
struct ProbeBlock {
    RMatrix W;
    ProbeDistribution distribution = ProbeDistribution::Gaussian;
    std::uint64_t seed = 0;

    Index num_sources() const { return W.rows(); }
    Index count() const { return W.cols(); }
};

/// Column-major fill from a single stream, so the block is a pure function of
/// (ns, k, dist, seed).
ProbeBlock draw_probes(Index ns, Index k, ProbeDistribution dist, std::uint64_t seed);

/// (1/K) sum_j ||B w_j||^2, an unbiased estimate of ||B||_F^2.
double randomized_misfit(const CMatrix& B, const ProbeBlock& probes);

/// Contrasts masking before probing, (1/K)||(M.*B) W||_F^2, with masking after
/// probing and spreading back, (1/K)||M .* (B W W^T)||_F^2. A mask does not
/// commute with shot superposition, so the two differ for generic B.
std::pair<double, double> masked_misfit_counterexample(const CMatrix& B, const MaskMatrix& M,
                                                       const ProbeBlock& probes);

}  // namespace jfwi
