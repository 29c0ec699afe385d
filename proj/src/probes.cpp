#include "jfwi/probes.hpp"

#include "jfwi/random.hpp"

namespace jfwi {

ProbeBlock draw_probes(Index ns, Index k, ProbeDistribution dist, std::uint64_t seed)
{
    if (k < 1 || ns < 1)
        throw Error(ErrorKind::BadShape, "probe block needs ns >= 1 and K >= 1");
    ProbeBlock p;
    p.distribution = dist;
    p.seed = seed;
    p.W.resize(ns, k);
    Rng rng(seed);
    for (Index j = 0; j < k; ++j)
        for (Index i = 0; i < ns; ++i)
            p.W(i, j) = dist == ProbeDistribution::Gaussian ? rng.normal() : rng.rademacher();
    return p;
}

double randomized_misfit(const CMatrix& B, const ProbeBlock& probes)
{
    if (B.cols() != probes.num_sources())
        throw Error(ErrorKind::ShapeMismatch, "B columns must equal the probe length");
    return (B * probes.W.cast<Complex>()).squaredNorm() / double(probes.count());
}

std::pair<double, double> masked_misfit_counterexample(const CMatrix& B, const MaskMatrix& M,
                                                       const ProbeBlock& probes)
{
    if (B.cols() != probes.num_sources())
        throw Error(ErrorKind::ShapeMismatch, "B columns must equal the probe length");
    const CMatrix W = probes.W.cast<Complex>();
    const double k = double(probes.count());
    const double lhs = (apply_mask_to(M, B) * W).squaredNorm() / k;
    const CMatrix spread = (B * W) * W.transpose();
    const double rhs = apply_mask_to(M, spread).squaredNorm() / k;
    return {lhs, rhs};
}

}  // namespace jfwi
