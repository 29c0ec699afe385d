#include "jfwi/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <limits>

#include <Eigen/SVD>

#include "jfwi/midoff.hpp"

namespace jfwi {

const char* to_string(CompletionStatus s)
{
    switch (s) {
    case CompletionStatus::Converged: return "converged";
    case CompletionStatus::ZeroFeasible: return "zero_feasible";
    case CompletionStatus::BudgetTooTight: return "budget_too_tight";
    case CompletionStatus::MaxIterations: return "max_iterations";
    }
    return "unknown";
}

void CompletionProblem::validate() const
{
    const auto& d = data.observed.data;
    require_shape(data.mask.rows(), data.mask.cols(), d.rows(), d.cols(), "completion mask");
    if (d.size() == 0)
        throw Error(ErrorKind::BadShape, "empty completion problem");
    if (lambda < 0.0 || epsilon < 0.0)
        throw Error(ErrorKind::BadSpec, "lambda and epsilon must be nonnegative");
    if ((lambda > 0.0) != shots.has_value())
        throw Error(ErrorKind::BadSpec, "lambda > 0 exactly when simulated shots are given");
    if (shots) {
        require_shape(shots->W.rows(), shots->W.cols(), d.cols(), shots->W.cols(), "shot weights");
        require_shape(shots->FW.rows(), shots->FW.cols(), d.rows(), shots->W.cols(),
                      "simulated shots");
    }
    if (rank_cap < 1 || rank_cap > order())
        throw Error(ErrorKind::BadShape, "rank cap must lie in [1, rows + cols - 1]");
}

namespace {

struct Evaluation {
    double f;
    CMatrix GY;  // gradient with respect to the midpoint-offset product LR
};

// T*(LR) without forming the off-support entries of LR
CMatrix product_on_support(const CompletionProblem& p, const CMatrix& L, const CMatrix& R)
{
    const MidOffMap map(p.rows(), p.cols());
    CMatrix X(p.rows(), p.cols());
    for (Index c = 0; c < X.cols(); ++c)
        for (Index r = 0; r < X.rows(); ++r)
            X(r, c) = L.row(map.mid(r, c)).transpose().cwiseProduct(R.col(map.off(r, c))).sum();
    return X;
}

Evaluation evaluate(const CompletionProblem& p, const CMatrix& L, const CMatrix& R, bool grad)
{
    const CMatrix X = product_on_support(p, L, R);
    const auto& mask = p.data.mask;
    const auto& ds = p.data.observed.data;

    CMatrix r1 = CMatrix::Zero(X.rows(), X.cols());
    for (Index j = 0; j < X.cols(); ++j)
        for (Index i = 0; i < X.rows(); ++i)
            if (mask(i, j))
                r1(i, j) = X(i, j) - ds(i, j);
    double f = r1.squaredNorm();

    CMatrix GX;
    if (grad)
        GX = 2.0 * r1;
    if (p.shots && p.lambda > 0.0) {
        const CMatrix W = p.shots->W.cast<Complex>();
        const CMatrix r2 = X * W - p.shots->FW;
        f += 0.5 * p.lambda * r2.squaredNorm();
        if (grad)
            GX.noalias() += p.lambda * (r2 * W.transpose());
    }
    Evaluation e{f, {}};
    if (grad)
        e.GY = to_midoff(GX);
    return e;
}

void check_factor_shapes(const CompletionProblem& p, const Factorization& f)
{
    if (f.L.rows() != p.order() || f.R.cols() != p.order() || f.L.cols() != f.R.rows())
        throw Error(ErrorKind::ShapeMismatch, "factor shapes do not match the problem");
}

}  // namespace

CMatrix completed_data(const CompletionProblem& p, const Factorization& f)
{
    check_factor_shapes(p, f);
    return from_midoff(f.L * f.R, p.rows(), p.cols());
}

double residual(const CompletionProblem& p, const Factorization& f)
{
    p.validate();
    check_factor_shapes(p, f);
    return evaluate(p, f.L, f.R, false).f;
}

FactorGradient residual_gradient(const CompletionProblem& p, const Factorization& f)
{
    p.validate();
    check_factor_shapes(p, f);
    const auto e = evaluate(p, f.L, f.R, true);
    return {e.GY * f.R.adjoint(), f.L.adjoint() * e.GY};
}

Factorization project_ball(Factorization f, double tau)
{
    if (tau < 0.0)
        throw Error(ErrorKind::BadSpec, "ball radius must be nonnegative");
    const double s = f.norm_sum();
    if (s > tau) {
        const double scale = s > 0.0 ? std::sqrt(tau / s) : 0.0;
        f.L *= scale;
        f.R *= scale;
    }
    f.tau = tau;
    return f;
}

LassoResult solve_lasso(const CompletionProblem& p, double tau, const Factorization& start,
                        const SpgOptions& opt)
{
    p.validate();
    check_factor_shapes(p, start);
    if (opt.max_iter < 1)
        throw Error(ErrorKind::BadSpec, "max_iter must be at least 1");

    Factorization x = project_ball(start, tau);
    auto ev = evaluate(p, x.L, x.R, true);
    CMatrix gL = ev.GY * x.R.adjoint();
    CMatrix gR = x.L.adjoint() * ev.GY;
    double f = ev.f;

    LassoResult res;
    res.F = x;
    res.v = f;
    res.history.push_back(f);

    auto grad_norm = [&] { return std::sqrt(gL.squaredNorm() + gR.squaredNorm()); };
    const double g0 = grad_norm();
    res.log.push_back({0, tau, f, g0});
    if (!(g0 > 0.0) || tau == 0.0)
        return res;

    double alpha = 1.0 / g0;
    const double alpha_min = 1e-12 * alpha, alpha_max = 1e12 * alpha;
    std::deque<double> window{f};

    for (int it = 1; it <= opt.max_iter; ++it) {
        const Factorization trial = project_ball({x.L - alpha * gL, x.R - alpha * gR, tau}, tau);
        const CMatrix dL = trial.L - x.L;
        const CMatrix dR = trial.R - x.R;
        const double dnorm = std::sqrt(dL.squaredNorm() + dR.squaredNorm());
        const double xnorm = std::sqrt(x.L.squaredNorm() + x.R.squaredNorm());
        if (dnorm <= opt.step_tol * std::max(1.0, xnorm))
            break;
        const double gtd = real_dot(gL, dL) + real_dot(gR, dR);
        if (!(gtd < 0.0))
            break;

        const double fmax = *std::max_element(window.begin(), window.end());
        double step = 1.0;
        CMatrix nL, nR;
        Evaluation nev;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            nL = x.L + step * dL;
            nR = x.R + step * dR;
            nev = evaluate(p, nL, nR, false);
            if (nev.f <= fmax + opt.sufficient_decrease * step * gtd) {
                accepted = true;
                break;
            }
            // safeguarded quadratic interpolation of f(x + step*d)
            const double denom = 2.0 * (nev.f - f - step * gtd);
            double next = denom > 0.0 ? -gtd * step * step / denom : 0.5 * step;
            if (!(next >= 0.1 * step && next <= 0.9 * step))
                next = 0.5 * step;
            step = next;
        }
        if (!accepted)
            break;

        nev = evaluate(p, nL, nR, true);
        CMatrix ngL = nev.GY * nR.adjoint();
        CMatrix ngR = nL.adjoint() * nev.GY;
        const double sts = (nL - x.L).squaredNorm() + (nR - x.R).squaredNorm();
        const double sty = real_dot(nL - x.L, ngL - gL) + real_dot(nR - x.R, ngR - gR);
        alpha = sty > 0.0 ? std::clamp(sts / sty, alpha_min, alpha_max) : alpha_max;

        x.L = std::move(nL);
        x.R = std::move(nR);
        gL = std::move(ngL);
        gR = std::move(ngR);
        f = nev.f;

        res.iterations = it;
        res.history.push_back(f);
        res.log.push_back({it, tau, f, grad_norm()});
        if (f < res.v) {
            res.v = f;
            res.F = x;
        }
        window.push_back(f);
        if (int(window.size()) > opt.memory)
            window.pop_front();
        if (f == 0.0)
            break;
    }
    res.F.tau = tau;
    return res;
}

namespace {

struct Visit {
    double tau;
    double v;
    Factorization F;
};

}  // namespace

CompletionResult solve_completion(const CompletionProblem& p, const Factorization& start,
                                  const RootOptions& opt)
{
    p.validate();
    check_factor_shapes(p, start);

    CompletionResult out;
    Factorization zero{CMatrix::Zero(start.L.rows(), start.L.cols()),
                       CMatrix::Zero(start.R.rows(), start.R.cols()), 0.0};
    const double v0 = evaluate(p, zero.L, zero.R, false).f;
    out.trace.push_back({0.0, v0});
    if (p.epsilon >= v0) {
        out.F = zero;
        out.v = v0;
        out.status = CompletionStatus::ZeroFeasible;
        return out;
    }

    Factorization seed = start;
    if (seed.norm_sum() == 0.0) {
        FrequencySlice ds = to_midoff(p.data.observed);
        seed = init_factors(ds, start.L.cols());
    }

    const double eps = p.epsilon;
    const double tol = opt.root_tol * eps;
    std::vector<Visit> visits;

    // warm start: the solution at the largest visited tau below the target,
    // else the nearest one above it (the projection shrinks it into the ball)
    auto warm_start = [&](double tau) -> const Factorization& {
        const Visit* below = nullptr;
        const Visit* above = nullptr;
        for (const auto& v : visits) {
            if (v.tau <= tau && (!below || v.tau > below->tau))
                below = &v;
            if (v.tau > tau && (!above || v.tau < above->tau))
                above = &v;
        }
        if (below)
            return below->F;
        if (above)
            return above->F;
        return seed;
    };

    // Secant on sqrt(v) - sqrt(eps): same root, but the residual norm is
    // close to linear in tau near the solution where v itself flattens out.
    // Steps that leave the current bracket fall back to regula falsi.
    const double target = std::sqrt(eps);
    double tau_prev = 0.0, r_prev = std::sqrt(v0);
    double lo_tau = 0.0, lo_r = r_prev;  // v > eps
    double hi_tau = std::numeric_limits<double>::infinity(), hi_r = 0.0;
    double tau = seed.norm_sum();
    bool stalled = false;
    for (int it = 0; it < opt.max_root_iter; ++it) {
        const auto lasso = solve_lasso(p, tau, warm_start(tau), opt.spg);
        visits.push_back({tau, lasso.v, lasso.F});
        out.trace.push_back({tau, lasso.v});
        out.log.insert(out.log.end(), lasso.log.begin(), lasso.log.end());

        const double v = lasso.v;
        if (std::abs(v - eps) <= tol) {
            out.status = CompletionStatus::Converged;
            break;
        }
        const double r = std::sqrt(v);
        if (v > eps && tau > lo_tau) {
            lo_tau = tau;
            lo_r = r;
        } else if (v < eps && tau < hi_tau) {
            hi_tau = tau;
            hi_r = r;
        }
        const double slope = (r - r_prev) / (tau - tau_prev);
        if (v > eps && tau > tau_prev && !(r_prev - r > 1e-9 * r_prev) && !std::isfinite(hi_tau)) {
            stalled = true;
            break;
        }
        double next = slope < 0.0 && std::isfinite(slope) ? tau - (r - target) / slope
                                                         : std::numeric_limits<double>::quiet_NaN();
        if (std::isfinite(hi_tau)) {
            if (!(next > lo_tau && next < hi_tau))
                next = lo_tau + (lo_r - target) * (hi_tau - lo_tau) / (lo_r - hi_r);
        } else {
            if (!std::isfinite(next))
                next = 2.0 * tau;
            // keep the iteration from collapsing to the origin or running away
            next = std::clamp(next, std::max(lo_tau, 0.1 * tau), 10.0 * tau);
        }
        tau_prev = tau;
        r_prev = r;
        tau = next;
    }

    // Prefer a point within tolerance, then the most regularized feasible
    // point, then the smallest residual seen.
    const Visit* pick = nullptr;
    for (const auto& v : visits)
        if (std::abs(v.v - eps) <= tol && (!pick || std::abs(v.v - eps) < std::abs(pick->v - eps)))
            pick = &v;
    if (!pick)
        for (const auto& v : visits)
            if (v.v <= eps && (!pick || v.tau < pick->tau))
                pick = &v;
    if (!pick)
        for (const auto& v : visits)
            if (!pick || v.v < pick->v)
                pick = &v;

    out.F = pick->F;
    out.v = pick->v;
    if (std::abs(out.v - eps) <= tol)
        out.status = CompletionStatus::Converged;
    else if (out.v > eps && (stalled || visits.size() >= std::size_t(opt.max_root_iter)))
        out.status = stalled ? CompletionStatus::BudgetTooTight : CompletionStatus::MaxIterations;
    else
        out.status = CompletionStatus::MaxIterations;
    return out;
}

Factorization init_factors(const FrequencySlice& midoff_data, Index k)
{
    const CMatrix& d = midoff_data.data;
    if (k < 1 || k > std::min(d.rows(), d.cols()))
        throw Error(ErrorKind::BadShape, "rank must lie in [1, min(rows, cols)]");
    Eigen::JacobiSVD<CMatrix> svd(d, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector s = svd.singularValues().head(k).cwiseSqrt();
    Factorization f;
    f.L = svd.matrixU().leftCols(k) * s.cast<Complex>().asDiagonal();
    f.R = s.cast<Complex>().asDiagonal() * svd.matrixV().leftCols(k).adjoint();
    f.tau = f.norm_sum();
    return f;
}

Index default_rank_cap(Index ns, Index nr)
{
    const Index m = std::min(ns, nr);
    return std::max<Index>(5, (m + 9) / 10);
}

double default_epsilon(const AcquisitionMask& data, double rel)
{
    const double n = rel * data.observed.data.norm();
    return n * n;
}

void write_convergence_csv(const std::filesystem::path& path, const std::vector<SpgLogRow>& log)
{
    std::ofstream os(path);
    if (!os)
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    os << "iter,tau,v_tau,grad_norm\n" << std::setprecision(17);
    for (const auto& r : log)
        os << r.iter << ',' << r.tau << ',' << r.v << ',' << r.grad_norm << '\n';
}

}  // namespace jfwi
