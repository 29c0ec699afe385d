#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>

#include <Eigen/SparseCore>

#include "jfwi/banded_lu.hpp"
#include "jfwi/core.hpp"

namespace jfwi {

enum class Boundary {
    /// First-order Sommerfeld condition du/dn - i*omega*sqrt(m)*u = 0 on all edges.
    Absorbing,
    /// du/dn = 0 on all edges; the operator is then real symmetric.
    Neumann,
};

/// Process-wide tally of Helmholtz right-hand sides solved.
struct PdeCounter {
    std::atomic<std::uint64_t> forward{0};
    std::atomic<std::uint64_t> adjoint{0};

    std::uint64_t total() const { return forward.load() + adjoint.load(); }
    void reset()
    {
        forward = 0;
        adjoint = 0;
    }
};

PdeCounter& pde_counter();

using SparseCMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

/// Discrete constant-density Helmholtz operator
///   H(m) = omega^2 diag(m) + Lap_h
/// with the 5-point Laplacian on interior nodes. Boundary rows hold the
/// one-sided boundary condition scaled by -1/h, which keeps H complex
/// symmetric (H^T = H). Corner rows are decoupled.
///
/// The LU factorization is computed on first solve and reused; it belongs to
/// this (m, omega) pair, so build a new operator whenever m changes.
class HelmholtzOperator {
public:
    HelmholtzOperator(const ModelGrid& g, double omega, Boundary bc = Boundary::Absorbing);

    Index size() const { return n_; }
    Index nz() const { return nz_; }
    Index nx() const { return nx_; }
    double h() const { return h_; }
    double omega() const { return omega_; }
    Boundary boundary() const { return bc_; }
    const SparseCMatrix& matrix() const { return a_; }

    CMatrix apply(const CMatrix& u) const { return a_ * u; }

    /// Diagonal of dH/dm_i (H depends on m only through its diagonal).
    const CVector& diagonal_derivative() const { return dhdm_; }

    CMatrix solve(const CMatrix& rhs) const;
    CMatrix solve_adjoint(const CMatrix& rhs) const;

    bool factored() const { return cache_->lu && cache_->lu->factored(); }

private:
    const BandedLU<Complex>& factor() const;

    Index nz_, nx_, n_;
    double h_, omega_;
    Boundary bc_;
    SparseCMatrix a_;
    CVector dhdm_;

    struct Cache {
        std::once_flag once;
        std::unique_ptr<BandedLU<Complex>> lu;
    };
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

/// Assembles H for a validated model; throws BadShape/NonPositiveSlowness.
HelmholtzOperator assemble(const ModelGrid& g, double omega, Boundary bc = Boundary::Absorbing);

}  // namespace jfwi
