#include "jfwi/helmholtz.hpp"

#include <vector>

namespace jfwi {

PdeCounter& pde_counter()
{
    static PdeCounter counter;
    return counter;
}

HelmholtzOperator::HelmholtzOperator(const ModelGrid& g, double omega, Boundary bc)
    : nz_(g.nz), nx_(g.nx), n_(g.size()), h_(g.h), omega_(omega), bc_(bc)
{
    validate_model(g);
    if (!(omega > 0.0) || !std::isfinite(omega))
        throw Error(ErrorKind::BadShape, "omega must be positive");

    const double ih2 = 1.0 / (h_ * h_);
    const Complex iw_h(0.0, omega_ / h_);
    const bool absorbing = bc_ == Boundary::Absorbing;

    std::vector<Eigen::Triplet<Complex>> trips;
    trips.reserve(std::size_t(5 * n_));
    dhdm_.setZero(n_);

    for (Index ix = 0; ix < nx_; ++ix) {
        for (Index iz = 0; iz < nz_; ++iz) {
            const Index k = g.index(iz, ix);
            const double mk = g.m[k];
            const bool top = iz == 0, bottom = iz == nz_ - 1;
            const bool left = ix == 0, right = ix == nx_ - 1;
            const int edges = int(top) + int(bottom) + int(left) + int(right);

            if (edges == 0) {
                trips.emplace_back(k, k, Complex(omega_ * omega_ * mk - 4.0 * ih2, 0.0));
                trips.emplace_back(k, k - 1, ih2);
                trips.emplace_back(k, k + 1, ih2);
                trips.emplace_back(k, k - nz_, ih2);
                trips.emplace_back(k, k + nz_, ih2);
                dhdm_[k] = omega_ * omega_;
                continue;
            }

            // -(du/dn - i w sqrt(m) u)/h with du/dn ~ (u_k - u_inward)/h
            const double sq = std::sqrt(mk);
            Complex diag(-double(edges) * ih2, 0.0);
            if (absorbing) {
                diag += double(edges) * iw_h * sq;
                dhdm_[k] = double(edges) * iw_h * (0.5 / sq);
            }
            trips.emplace_back(k, k, diag);
            if (edges == 1) {
                const Index inward = top ? k + 1 : bottom ? k - 1 : left ? k + nz_ : k - nz_;
                trips.emplace_back(k, inward, ih2);
            }
        }
    }
    a_.resize(n_, n_);
    a_.setFromTriplets(trips.begin(), trips.end());
    a_.makeCompressed();
}

const BandedLU<Complex>& HelmholtzOperator::factor() const
{
    Cache& c = *cache_;
    std::call_once(c.once, [&] {
        auto lu = std::make_unique<BandedLU<Complex>>();
        lu->compute(a_, nz_, nz_);
        c.lu = std::move(lu);
    });
    return *c.lu;
}

CMatrix HelmholtzOperator::solve(const CMatrix& rhs) const
{
    if (rhs.rows() != n_)
        throw Error(ErrorKind::ShapeMismatch, "rhs rows must equal nz*nx");
    CMatrix x = rhs;
    if (rhs.cols() == 0)
        return x;
    factor().solve_in_place(x);
    pde_counter().forward += std::uint64_t(rhs.cols());
    return x;
}

CMatrix HelmholtzOperator::solve_adjoint(const CMatrix& rhs) const
{
    if (rhs.rows() != n_)
        throw Error(ErrorKind::ShapeMismatch, "rhs rows must equal nz*nx");
    CMatrix x = rhs;
    if (rhs.cols() == 0)
        return x;
    factor().solve_adjoint_in_place(x);
    pde_counter().adjoint += std::uint64_t(rhs.cols());
    return x;
}

HelmholtzOperator assemble(const ModelGrid& g, double omega, Boundary bc)
{
    return HelmholtzOperator(g, omega, bc);
}

}  // namespace jfwi
