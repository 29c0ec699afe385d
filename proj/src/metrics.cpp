#include "jfwi/metrics.hpp"

#include <algorithm>

namespace jfwi {

double snr_db(const CMatrix& truth, const CMatrix& estimate)
{
    require_shape(estimate.rows(), estimate.cols(), truth.rows(), truth.cols(), "SNR estimate");
    const double ref = truth.norm();
    if (!(ref > 0.0))
        throw Error(ErrorKind::ZeroReference, "SNR of a zero reference is undefined");
    const double rel = (estimate - truth).norm() / ref;
    if (rel == 0.0)
        return 300.0;
    return std::min(300.0, -20.0 * std::log10(rel));
}

double model_error(const RVector& truth, const RVector& estimate)
{
    if (truth.size() != estimate.size())
        throw Error(ErrorKind::ShapeMismatch, "model sizes differ");
    const double ref = truth.norm();
    if (!(ref > 0.0))
        throw Error(ErrorKind::ZeroReference, "model error against a zero model");
    return (estimate - truth).norm() / ref;
}

double model_error(const ModelGrid& truth, const ModelGrid& estimate)
{
    require_shape(estimate.nz, estimate.nx, truth.nz, truth.nx, "model grid");
    return model_error(truth.m, estimate.m);
}

}  // namespace jfwi
