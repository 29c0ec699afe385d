#include "jfwi/core.hpp"

namespace jfwi {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::NonPositiveSlowness: return "NonPositiveSlowness";
    case ErrorKind::BadShape: return "BadShape";
    case ErrorKind::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorKind::SingularOperator: return "SingularOperator";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::BadRatio: return "BadRatio";
    case ErrorKind::WrongDomain: return "WrongDomain";
    case ErrorKind::EmptySchedule: return "EmptySchedule";
    case ErrorKind::BadSpec: return "BadSpec";
    case ErrorKind::ZeroReference: return "ZeroReference";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

void validate_model(const ModelGrid& g)
{
    if (g.nz < 3 || g.nx < 3)
        throw Error(ErrorKind::BadShape, "grid must be at least 3x3 (nz >= 3, nx >= 3)");
    if (!(g.h > 0.0) || !std::isfinite(g.h))
        throw Error(ErrorKind::BadShape, "grid spacing h must be positive");
    if (g.m.size() != g.size())
        throw Error(ErrorKind::BadShape, "model length must equal nz*nx");
    for (Index i = 0; i < g.m.size(); ++i) {
        const double v = g.m[i];
        if (!std::isfinite(v) || v <= 0.0)
            throw Error(ErrorKind::NonPositiveSlowness,
                        "squared slowness must be positive and finite (index " +
                            std::to_string(i) + ")");
    }
}

ModelGrid constant_model(Index nz, Index nx, double h, double velocity)
{
    ModelGrid g{nz, nx, h, RVector::Constant(nz * nx, 1.0 / (velocity * velocity))};
    return g;
}

}  // namespace jfwi
