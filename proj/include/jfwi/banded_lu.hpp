#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "jfwi/core.hpp"

namespace jfwi {

/// LU factorization with partial pivoting of a square band matrix with kl
/// sub- and ku super-diagonals. Storage and elimination order follow
/// LAPACK's xGBTF2: the factor U occupies kl+ku super-diagonals after
/// pivoting, multipliers of L live below the diagonal of each column.
template <typename Scalar>
class BandedLU {
public:
    using RealScalar = typename Eigen::NumTraits<Scalar>::Real;

    BandedLU() = default;

    /// Factor a sparse matrix whose nonzeros lie within the given bands.
    /// Throws SingularOperator when a pivot falls below
    /// pivot_tol * max|A_ij| in magnitude.
    template <typename SparseDerived>
    void compute(const Eigen::SparseMatrixBase<SparseDerived>& a, Index kl, Index ku,
                 RealScalar pivot_tol = RealScalar(1e-14))
    {
        const auto& A = a.derived();
        n_ = A.rows();
        if (A.cols() != n_)
            throw Error(ErrorKind::BadShape, "banded LU needs a square matrix");
        kl_ = kl;
        ku_ = ku;
        kv_ = kl + ku;
        ld_ = 2 * kl + ku + 1;
        ab_.setZero(ld_, n_);
        ipiv_.assign(std::size_t(n_), 0);

        RealScalar amax(0);
        for (Index k = 0; k < A.outerSize(); ++k)
            for (typename SparseDerived::InnerIterator it(A, k); it; ++it) {
                const Index i = it.row(), j = it.col();
                if (i - j > kl || j - i > ku)
                    throw Error(ErrorKind::BadShape, "entry outside declared band");
                at(i, j) = it.value();
                amax = std::max<RealScalar>(amax, std::abs(it.value()));
            }
        const RealScalar tiny = pivot_tol * amax;

        Index ju = 0;
        for (Index j = 0; j < n_; ++j) {
            const Index km = std::min(kl_, n_ - 1 - j);
            Index jp = 0;
            RealScalar best = std::abs(at(j, j));
            for (Index i = 1; i <= km; ++i) {
                const RealScalar v = std::abs(at(j + i, j));
                if (v > best) {
                    best = v;
                    jp = i;
                }
            }
            ipiv_[std::size_t(j)] = j + jp;
            if (!(best > tiny))
                throw Error(ErrorKind::SingularOperator,
                            "pivot " + std::to_string(double(best)) + " at column " +
                                std::to_string(j));
            ju = std::max(ju, std::min(j + ku_ + jp, n_ - 1));
            if (jp != 0)
                for (Index c = j; c <= ju; ++c)
                    std::swap(at(j, c), at(j + jp, c));
            if (km > 0) {
                const Scalar inv = Scalar(1) / at(j, j);
                for (Index i = 1; i <= km; ++i)
                    at(j + i, j) *= inv;
                for (Index c = j + 1; c <= ju; ++c) {
                    const Scalar ujc = at(j, c);
                    if (ujc == Scalar(0))
                        continue;
                    for (Index i = 1; i <= km; ++i)
                        at(j + i, c) -= at(j + i, j) * ujc;
                }
            }
        }
        factored_ = true;
    }

    bool factored() const { return factored_; }
    Index size() const { return n_; }

    /// Solves A X = B in place, column by column.
    template <typename Derived>
    void solve_in_place(Eigen::MatrixBase<Derived>& b) const
    {
        for (Index col = 0; col < b.cols(); ++col) {
            auto x = b.col(col);
            for (Index j = 0; j + 1 < n_; ++j) {
                const Index p = ipiv_[std::size_t(j)];
                if (p != j)
                    std::swap(x(j), x(p));
                const Index km = std::min(kl_, n_ - 1 - j);
                const Scalar xj = x(j);
                for (Index i = 1; i <= km; ++i)
                    x(j + i) -= at(j + i, j) * xj;
            }
            for (Index j = n_ - 1; j >= 0; --j) {
                x(j) /= at(j, j);
                const Scalar xj = x(j);
                for (Index i = std::max<Index>(0, j - kv_); i < j; ++i)
                    x(i) -= at(i, j) * xj;
            }
        }
    }

    /// Solves A^H X = B in place using the same factors.
    template <typename Derived>
    void solve_adjoint_in_place(Eigen::MatrixBase<Derived>& b) const
    {
        using std::conj;
        for (Index col = 0; col < b.cols(); ++col) {
            auto x = b.col(col);
            for (Index j = 0; j < n_; ++j) {
                Scalar s = x(j);
                for (Index i = std::max<Index>(0, j - kv_); i < j; ++i)
                    s -= Eigen::numext::conj(at(i, j)) * x(i);
                x(j) = s / Eigen::numext::conj(at(j, j));
            }
            for (Index j = n_ - 2; j >= 0; --j) {
                const Index km = std::min(kl_, n_ - 1 - j);
                Scalar s = x(j);
                for (Index i = 1; i <= km; ++i)
                    s -= Eigen::numext::conj(at(j + i, j)) * x(j + i);
                x(j) = s;
                const Index p = ipiv_[std::size_t(j)];
                if (p != j)
                    std::swap(x(j), x(p));
            }
        }
    }

private:
    Scalar& at(Index i, Index j) { return ab_(kv_ + i - j, j); }
    const Scalar& at(Index i, Index j) const { return ab_(kv_ + i - j, j); }

    Index n_ = 0, kl_ = 0, ku_ = 0, kv_ = 0, ld_ = 0;
    Matrix<Scalar> ab_;
    std::vector<Index> ipiv_;
    bool factored_ = false;
};

}  // namespace jfwi
