#pragma once

#include "jfwi/core.hpp"

namespace jfwi {

/// Source-receiver <-> midpoint-offset index map for a rows x cols slice.
///
/// Entry (r, c) goes to (r + c, r - c + cols - 1) of a square matrix of order
/// rows + cols - 1: the 45-degree rotation with integer (doubled) midpoint
/// and offset axes. The image is a checkerboard; the map is a permutation
/// onto it, so T is an isometry and T* its left inverse.
struct MidOffMap {
    Index rows = 0;
    Index cols = 0;

    MidOffMap(Index rows_, Index cols_) : rows(rows_), cols(cols_) {}

    Index order() const { return rows + cols - 1; }
    Index mid(Index r, Index c) const { return r + c; }
    Index off(Index r, Index c) const { return r - c + cols - 1; }

    /// True when (i, j) of the midpoint-offset matrix is the image of some (r, c).
    bool on_support(Index i, Index j) const
    {
        if ((i + j + cols - 1) % 2 != 0)
            return false;
        const Index r2 = i + j - (cols - 1), c2 = i - j + (cols - 1);
        return r2 >= 0 && c2 >= 0 && r2 / 2 < rows && c2 / 2 < cols;
    }
};

template <typename Derived>
Matrix<typename Derived::Scalar> to_midoff(const Eigen::MatrixBase<Derived>& d)
{
    const MidOffMap map(d.rows(), d.cols());
    Matrix<typename Derived::Scalar> out =
        Matrix<typename Derived::Scalar>::Zero(map.order(), map.order());
    for (Index c = 0; c < d.cols(); ++c)
        for (Index r = 0; r < d.rows(); ++r)
            out(map.mid(r, c), map.off(r, c)) = d(r, c);
    return out;
}

/// Adjoint of to_midoff; entries off the checkerboard support are ignored.
template <typename Derived>
Matrix<typename Derived::Scalar> from_midoff(const Eigen::MatrixBase<Derived>& y, Index rows,
                                             Index cols)
{
    const MidOffMap map(rows, cols);
    require_shape(y.rows(), y.cols(), map.order(), map.order(), "from_midoff input");
    const auto& src = y.derived().eval();  // product expressions have no cheap coeff()
    Matrix<typename Derived::Scalar> d(rows, cols);
    for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r)
            d(r, c) = src(map.mid(r, c), map.off(r, c));
    return d;
}

MaskMatrix midoff_support(Index rows, Index cols);

FrequencySlice to_midoff(const FrequencySlice& d);
/// The midpoint-offset slice alone does not fix (rows, cols); pass them.
FrequencySlice from_midoff(const FrequencySlice& y, Index rows, Index cols);

}  // namespace jfwi
