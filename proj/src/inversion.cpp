#include "jfwi/inversion.hpp"

#include <cmath>
#include <limits>

namespace jfwi {

void ShotMisfitSpec::validate(bool need_targets) const
{
    validate_survey(survey, grid);
    if (omegas.empty())
        throw Error(ErrorKind::BadShape, "misfit needs at least one frequency");
    if (amps.size() != omegas.size())
        throw Error(ErrorKind::ShapeMismatch, "one source amplitude per frequency");
    require_shape(probes.W.rows(), probes.W.cols(), survey.num_sources(), probes.W.cols(),
                  "probe block");
    if (probes.count() < 1)
        throw Error(ErrorKind::BadShape, "probe block is empty");
    if (!need_targets)
        return;
    if (targets.size() != omegas.size())
        throw Error(ErrorKind::ShapeMismatch, "one target per frequency");
    for (const auto& t : targets)
        require_shape(t.rows(), t.cols(), survey.num_receivers(), probes.count(), "target");
}

namespace {

ModelGrid with_model(const ModelGrid& geometry, const RVector& m)
{
    ModelGrid g = geometry;
    g.m = m;
    validate_model(g);
    return g;
}

bool reusable(const SimulatedShotFields* reuse, const RVector& m, std::size_t nw)
{
    return reuse && reuse->U.size() == nw && reuse->m.size() == m.size() && reuse->m == m;
}

}  // namespace

SimulatedShotFields simulate_shots(const ShotMisfitSpec& spec, const RVector& m)
{
    spec.validate(false);
    const ModelGrid g = with_model(spec.grid, m);
    SimulatedShotFields out;
    out.m = m;
    for (std::size_t w = 0; w < spec.omegas.size(); ++w) {
        const HelmholtzOperator H(g, spec.omegas[w], spec.bc);
        out.U.push_back(H.solve(scatter_sources(spec.survey, g, spec.probes.W, spec.amps[w])));
        out.FW.push_back(gather_receivers(spec.survey, out.U.back()));
    }
    return out;
}

MisfitGradient misfit_and_gradient(const ShotMisfitSpec& spec, const RVector& m,
                                   const SimulatedShotFields* reuse)
{
    spec.validate();
    const ModelGrid g = with_model(spec.grid, m);
    const bool cached = reusable(reuse, m, spec.omegas.size());
    const double inv_k = 1.0 / double(spec.num_probes());

    MisfitGradient out;
    out.g = RVector::Zero(g.size());
    for (std::size_t w = 0; w < spec.omegas.size(); ++w) {
        const HelmholtzOperator H(g, spec.omegas[w], spec.bc);
        CMatrix U_local;
        if (!cached)
            U_local = H.solve(scatter_sources(spec.survey, g, spec.probes.W, spec.amps[w]));
        const CMatrix& U = cached ? reuse->U[w] : U_local;

        const CMatrix r = gather_receivers(spec.survey, U) - spec.targets[w];
        out.phi += 0.5 * inv_k * r.squaredNorm();

        // dphi/dm_i = -(1/K) Re sum_k conj(v_ik) c_i u_ik,  V = H^-H P^T r
        const CMatrix V = H.solve_adjoint(spread_receivers(spec.survey, g.size(), r));
        const CVector& c = H.diagonal_derivative();
        for (Index i = 0; i < g.size(); ++i) {
            const Complex s = V.row(i).dot(U.row(i));  // sum_k conj(v) u
            out.g[i] -= inv_k * (c[i] * s).real();
        }
    }
    return out;
}

MSubproblemResult solve_m_subproblem(const ShotMisfitSpec& spec, const RVector& m0,
                                     const MSubproblemOptions& opt,
                                     const SimulatedShotFields* reuse)
{
    spec.validate();
    if (opt.box && !(opt.box->first > 0.0 && opt.box->first < opt.box->second))
        throw Error(ErrorKind::BadSpec, "model box needs 0 < lower < upper");
    if (opt.box && (m0.minCoeff() < opt.box->first || m0.maxCoeff() > opt.box->second))
        throw Error(ErrorKind::BadSpec, "starting model lies outside the box");
    MSubproblemResult res;
    res.m = m0;
    if (opt.iter_cap <= 0)
        return res;

    const MisfitGradient first = misfit_and_gradient(spec, m0, reuse);
    res.phi0 = res.phi = first.phi;
    res.evaluations = 1;
    if (!(first.phi > 0.0))
        return res;

    const double scale = m0.mean();
    const double fscale = 1.0 / first.phi;
    bool used_first = false;

    // With a box the oracle sees the clamped model; clamped cells get zero
    // gradient (outside the box, or on its face with descent pointing out).
    const auto to_model = [&](const RVector& x) -> RVector {
        if (!opt.box)
            return scale * x;
        return (scale * x).cwiseMax(opt.box->first).cwiseMin(opt.box->second);
    };
    const auto mask_clamped = [&](const RVector& x, RVector& g) {
        if (!opt.box)
            return;
        for (Index i = 0; i < x.size(); ++i) {
            const double m = scale * x[i];
            if ((m <= opt.box->first && (m < opt.box->first || g[i] > 0.0)) ||
                (m >= opt.box->second && (m > opt.box->second || g[i] < 0.0)))
                g[i] = 0.0;
        }
    };

    Objective f = [&](const RVector& x, RVector& gx) {
        if (!used_first) {  // lbfgs starts with x0 = m0 / scale
            used_first = true;
            gx = scale * fscale * first.g;
            mask_clamped(x, gx);
            return 1.0;
        }
        const RVector m = to_model(x);
        if (!m.allFinite() || m.minCoeff() <= 0.0) {
            gx.setZero();
            return std::numeric_limits<double>::infinity();
        }
        const auto mg = misfit_and_gradient(spec, m);
        gx = scale * fscale * mg.g;
        mask_clamped(x, gx);
        return mg.phi * fscale;
    };

    LbfgsOptions lo;
    lo.max_iter = opt.iter_cap;
    lo.memory = opt.memory;
    const auto lb = lbfgs_minimize(f, m0 / scale, lo);
    res.m = lb.iterations > 0 ? to_model(lb.x) : m0;
    res.phi = lb.f * first.phi;
    res.status = lb.status;
    res.iterations = lb.iterations;
    res.evaluations = lb.evaluations;
    res.log = lb.log;
    for (auto& row : res.log)
        row.f *= first.phi;
    return res;
}

}  // namespace jfwi
