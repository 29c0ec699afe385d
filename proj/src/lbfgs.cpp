#include "jfwi/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace jfwi {

const char* to_string(LbfgsStatus s)
{
    switch (s) {
    case LbfgsStatus::Converged: return "converged";
    case LbfgsStatus::MaxIterations: return "max_iterations";
    case LbfgsStatus::LineSearchFailure: return "line_search_failure";
    }
    return "unknown";
}

namespace {

struct Trial {
    double a = 0.0;
    double f = 0.0;
    double d = 0.0;  // directional derivative
    bool ok = false; // f finite
    RVector x, g;
};

// Minimizer of the cubic through (lo, hi) with end slopes, or of the
// quadratic when hi carries no slope; NaN if neither is usable.
double interpolate(const Trial& lo, const Trial& hi)
{
    if (hi.ok && std::isfinite(hi.d)) {
        const double d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (lo.a - hi.a);
        const double disc = d1 * d1 - lo.d * hi.d;
        if (disc >= 0.0) {
            const double d2 = std::copysign(std::sqrt(disc), hi.a - lo.a);
            return hi.a - (hi.a - lo.a) * (hi.d + d2 - d1) / (hi.d - lo.d + 2.0 * d2);
        }
    }
    if (hi.ok) {
        const double da = hi.a - lo.a;
        const double denom = 2.0 * (hi.f - lo.f - lo.d * da);
        if (denom > 0.0)
            return lo.a - lo.d * da * da / denom;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

class LineSearch {
public:
    LineSearch(const Objective& f, const RVector& x, const RVector& p, double f0, double d0,
               const LbfgsOptions& opt)
        : f_(f), x_(x), p_(p), f0_(f0), d0_(d0), opt_(opt)
    {
        lo_.a = 0.0;
        lo_.f = f0;
        lo_.d = d0;
        lo_.ok = true;
    }

    /// Strong Wolfe search from a0. On success `result` holds the accepted point.
    bool run(double a0)
    {
        Trial prev = lo_;
        double a = a0;
        for (bool first = true; evals_ < opt_.max_evals_per_search; first = false) {
            Trial t = eval(a);
            if (!t.ok || t.f > f0_ + opt_.c1 * a * d0_ || (!first && t.f >= prev.f))
                return zoom(prev, t);
            if (std::abs(t.d) <= -opt_.c2 * d0_) {
                result = std::move(t);
                return true;
            }
            if (t.d >= 0.0)
                return zoom(t, prev);
            prev = std::move(t);
            a *= 2.0;
        }
        return false;
    }

    int evaluations() const { return evals_; }

    /// Lowest finite point evaluated that satisfies the Armijo condition.
    const Trial* best() const { return best_.a > 0.0 ? &best_ : nullptr; }

    Trial result;

private:
    Trial eval(double a)
    {
        Trial t;
        t.a = a;
        t.x = x_ + a * p_;
        t.g.resize(x_.size());
        t.f = f_(t.x, t.g);
        t.ok = std::isfinite(t.f) && t.g.allFinite();
        t.d = t.ok ? t.g.dot(p_) : std::numeric_limits<double>::quiet_NaN();
        ++evals_;
        if (t.ok && t.f <= f0_ + opt_.c1 * a * d0_ && (best_.a == 0.0 || t.f < best_.f))
            best_ = t;
        return t;
    }

    bool zoom(Trial lo, Trial hi)
    {
        while (evals_ < opt_.max_evals_per_search) {
            const double left = std::min(lo.a, hi.a), right = std::max(lo.a, hi.a);
            const double width = right - left;
            if (width <= 1e-16 * right)
                return false;
            double a = interpolate(lo, hi);
            if (!(a >= left + 0.1 * width && a <= right - 0.1 * width))
                a = 0.5 * (lo.a + hi.a);
            Trial t = eval(a);
            if (!t.ok || t.f > f0_ + opt_.c1 * a * d0_ || t.f >= lo.f) {
                hi = std::move(t);
                continue;
            }
            if (std::abs(t.d) <= -opt_.c2 * d0_) {
                result = std::move(t);
                return true;
            }
            if (t.d * (hi.a - lo.a) >= 0.0)
                hi = lo;
            lo = std::move(t);
        }
        return false;
    }

    const Objective& f_;
    const RVector& x_;
    const RVector& p_;
    double f0_, d0_;
    const LbfgsOptions& opt_;
    Trial lo_;
    Trial best_;
    int evals_ = 0;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, const RVector& x0, const LbfgsOptions& opt)
{
    if (opt.memory < 1)
        throw Error(ErrorKind::BadSpec, "L-BFGS memory must be at least 1");

    LbfgsResult res;
    res.x = x0;
    res.g.resize(x0.size());
    res.f = f(res.x, res.g);
    res.evaluations = 1;
    if (!std::isfinite(res.f) || !res.g.allFinite())
        throw Error(ErrorKind::NonFiniteEntry, "objective is not finite at the starting point");
    res.history.push_back(res.f);

    const double g0 = res.g.norm();
    res.log.push_back({0, res.f, g0, 0.0, 1});
    const double gstop = opt.gtol * std::max(1.0, g0);
    if (g0 <= gstop) {
        res.status = LbfgsStatus::Converged;
        return res;
    }

    std::deque<RVector> S, Y;
    std::deque<double> rho;
    std::vector<double> alpha;

    for (int it = 1; it <= opt.max_iter; ++it) {
        // two-loop recursion
        RVector p = -res.g;
        alpha.assign(S.size(), 0.0);
        for (std::size_t i = S.size(); i-- > 0;) {
            alpha[i] = rho[i] * S[i].dot(p);
            p -= alpha[i] * Y[i];
        }
        if (!S.empty())
            p *= S.back().dot(Y.back()) / Y.back().squaredNorm();
        for (std::size_t i = 0; i < S.size(); ++i) {
            const double beta = rho[i] * Y[i].dot(p);
            p += (alpha[i] - beta) * S[i];
        }
        double d0 = res.g.dot(p);
        if (!(d0 < 0.0)) {
            S.clear();
            Y.clear();
            rho.clear();
            p = -res.g;
            d0 = -res.g.squaredNorm();
        }

        const double a0 = S.empty() ? 1.0 / p.norm() : 1.0;
        LineSearch ls(f, res.x, p, res.f, d0, opt);
        const bool ok = ls.run(a0);
        res.evaluations += ls.evaluations();
        if (!ok) {
            res.status = LbfgsStatus::LineSearchFailure;
            if (const Trial* b = ls.best(); b && b->f < res.f) {
                res.x = b->x;
                res.f = b->f;
                res.g = b->g;
                res.iterations = it;
                res.history.push_back(res.f);
                res.log.push_back({it, res.f, res.g.norm(), b->a, ls.evaluations()});
            }
            return res;
        }

        Trial& t = ls.result;
        RVector s = t.x - res.x;
        RVector y = t.g - res.g;
        const double sy = s.dot(y);
        res.x = std::move(t.x);
        res.g = std::move(t.g);
        res.f = t.f;
        res.iterations = it;
        res.history.push_back(res.f);
        const double gn = res.g.norm();
        res.log.push_back({it, res.f, gn, t.a, ls.evaluations()});

        if (sy > 1e-12 * s.norm() * y.norm()) {
            S.push_back(std::move(s));
            Y.push_back(std::move(y));
            rho.push_back(1.0 / sy);
            if (int(S.size()) > opt.memory) {
                S.pop_front();
                Y.pop_front();
                rho.pop_front();
            }
        }
        if (gn <= gstop) {
            res.status = LbfgsStatus::Converged;
            return res;
        }
    }
    res.status = LbfgsStatus::MaxIterations;
    return res;
}

}  // namespace jfwi
