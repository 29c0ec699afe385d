#pragma once

#include "jfwi/core.hpp"

namespace jfwi {

/// -20 log10(||estimate - truth||_F / ||truth||_F), capped at 300 dB.
/// Throws ZeroReference when ||truth|| = 0.
double snr_db(const CMatrix& truth, const CMatrix& estimate);

/// ||estimate - truth||_F / ||truth||_F on squared slowness.
double model_error(const ModelGrid& truth, const ModelGrid& estimate);
double model_error(const RVector& truth, const RVector& estimate);

}  // namespace jfwi
