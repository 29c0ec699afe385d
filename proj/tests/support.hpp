#pragma once

#include "jfwi/core.hpp"
#include "jfwi/random.hpp"

namespace jfwi::test {

inline CMatrix random_complex(Index rows, Index cols, Rng& rng)
{
    CMatrix a(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            a(i, j) = Complex(rng.normal(), rng.normal());
    return a;
}

inline RMatrix random_real(Index rows, Index cols, Rng& rng)
{
    RMatrix a(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            a(i, j) = rng.normal();
    return a;
}

inline double rel_err(const CMatrix& a, const CMatrix& b)
{
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace jfwi::test
