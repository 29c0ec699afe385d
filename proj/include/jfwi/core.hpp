#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace jfwi {

using Index = Eigen::Index;
using Complex = std::complex<double>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RMatrix = Matrix<double>;
using CMatrix = Matrix<Complex>;
using RVector = Vector<double>;
using CVector = Vector<Complex>;
using MaskMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class ErrorKind {
    NonPositiveSlowness,
    BadShape,
    NonFiniteEntry,
    SingularOperator,
    ShapeMismatch,
    BadRatio,
    WrongDomain,
    EmptySchedule,
    BadSpec,
    ZeroReference,
    Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Squared-slowness model on a regular 2-D grid. Linear index is iz + nz*ix
/// (z fastest), which is also the storage order of an nz x nx column-major
/// Eigen matrix.
struct ModelGrid {
    Index nz = 0;
    Index nx = 0;
    double h = 0.0;
    RVector m;

    Index size() const { return nz * nx; }
    Index index(Index iz, Index ix) const { return iz + nz * ix; }

    Eigen::Map<const RMatrix> as_image() const { return {m.data(), nz, nx}; }
};

/// Throws Error(BadShape | NonPositiveSlowness) naming the violated invariant.
void validate_model(const ModelGrid& g);

/// Convenience: grid with constant squared slowness 1/velocity^2.
ModelGrid constant_model(Index nz, Index nx, double h, double velocity);

enum class Domain { SourceReceiver, MidpointOffset };

/// One monochromatic data matrix. Source-receiver slices are stored
/// receivers x sources, so that D*W superposes shots column-wise.
struct FrequencySlice {
    double omega = 0.0;
    Domain domain = Domain::SourceReceiver;
    CMatrix data;
};

struct AcquisitionMask {
    MaskMatrix mask;
    FrequencySlice observed;

    double keep_fraction() const
    {
        return mask.size() == 0 ? 0.0 : double(mask.count()) / double(mask.size());
    }
};

/// Rank-k factor pair with the Frobenius-ball radius it was last projected to.
struct Factorization {
    CMatrix L;
    CMatrix R;
    double tau = 0.0;

    Index rank_cap() const { return L.cols(); }
    /// 0.5*||L||_F^2 + 0.5*||R||_F^2
    double norm_sum() const { return 0.5 * (L.squaredNorm() + R.squaredNorm()); }
    CMatrix product() const { return L * R; }
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& a)
{
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i) {
            const auto& v = a(i, j);
            using std::isfinite;
            if constexpr (Eigen::NumTraits<typename Derived::Scalar>::IsComplex) {
                if (!isfinite(v.real()) || !isfinite(v.imag()))
                    return false;
            } else if (!isfinite(v)) {
                return false;
            }
        }
    return true;
}

template <typename Derived>
double frobenius_norm(const Eigen::MatrixBase<Derived>& a)
{
    if (!all_finite(a))
        throw Error(ErrorKind::NonFiniteEntry, "frobenius_norm input");
    return double(a.norm());
}

/// Real inner product Re<a, b> = Re sum conj(a_ij) b_ij.
template <typename DA, typename DB>
double real_dot(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b)
{
    return std::real((a.array().conjugate() * b.array()).sum());
}

template <typename Derived>
CMatrix apply_mask_to(const MaskMatrix& mask, const Eigen::MatrixBase<Derived>& a)
{
    if (mask.rows() != a.rows() || mask.cols() != a.cols())
        throw Error(ErrorKind::ShapeMismatch, "mask and matrix shapes differ");
    CMatrix out = a;
    for (Index j = 0; j < out.cols(); ++j)
        for (Index i = 0; i < out.rows(); ++i)
            if (!mask(i, j))
                out(i, j) = Complex(0.0, 0.0);
    return out;
}

inline void require_shape(Index rows, Index cols, Index want_rows, Index want_cols,
                          const char* what)
{
    if (rows != want_rows || cols != want_cols)
        throw Error(ErrorKind::ShapeMismatch,
                    std::string(what) + ": got " + std::to_string(rows) + "x" +
                        std::to_string(cols) + ", expected " + std::to_string(want_rows) + "x" +
                        std::to_string(want_cols));
}

}  // namespace jfwi
