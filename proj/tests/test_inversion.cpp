#include <doctest.h>

#include "jfwi/inversion.hpp"
#include "jfwi/random.hpp"
#include "support.hpp"

using namespace jfwi;

namespace {

ModelGrid velocity_model(Index nz, Index nx, double h, double v0, double v1, double lens)
{
    ModelGrid g = constant_model(nz, nx, h, v0);
    for (Index ix = 0; ix < nx; ++ix)
        for (Index iz = 0; iz < nz; ++iz) {
            double v = v0 + (v1 - v0) * double(iz) / double(nz - 1);
            const double dz = double(iz) - 0.6 * double(nz), dx = double(ix) - 0.5 * double(nx);
            if (dz * dz + dx * dx < 0.04 * double(nz * nz))
                v += lens;
            g.m[g.index(iz, ix)] = 1.0 / (v * v);
        }
    return g;
}

struct Setup {
    ModelGrid truth;
    ModelGrid start;
    ShotMisfitSpec spec;
    std::vector<FrequencySlice> data;
};

Setup make_setup(Index nz, Index nx, Index ns, std::vector<double> freqs, Index k,
                 std::uint64_t seed)
{
    Setup s;
    s.truth = velocity_model(nz, nx, 10.0, 1800.0, 2600.0, 300.0);
    s.start = velocity_model(nz, nx, 10.0, 1800.0, 2600.0, 0.0);
    s.spec.grid = s.truth;
    s.spec.survey = line_survey(s.truth, ns, ns);
    s.spec.probes = draw_probes(ns, k, ProbeDistribution::Gaussian, seed);
    for (double f : freqs) {
        const double omega = 2 * M_PI * f;
        s.spec.omegas.push_back(omega);
        s.spec.amps.push_back(1.0);
        s.data.push_back(forward_data(s.truth, s.spec.survey, omega, 1.0));
        s.spec.targets.push_back(s.data.back().data * s.spec.probes.W.cast<Complex>());
    }
    return s;
}

// random direction supported away from the boundary rows and columns
RVector interior_direction(const ModelGrid& g, Rng& rng)
{
    RVector d = RVector::Zero(g.size());
    for (Index ix = 1; ix + 1 < g.nx; ++ix)
        for (Index iz = 1; iz + 1 < g.nz; ++iz)
            d[g.index(iz, ix)] = rng.normal();
    return d / d.cwiseAbs().maxCoeff();
}

double phi(const ShotMisfitSpec& spec, const RVector& m)
{
    return misfit_and_gradient(spec, m).phi;
}

}  // namespace

TEST_CASE("misfit vanishes at the model that generated the target")
{
    const auto s = make_setup(10, 14, 5, {6.0, 11.0}, 3, 1);
    const auto r = misfit_and_gradient(s.spec, s.truth.m);
    CHECK(r.phi < 1e-28);
    const auto at_start = misfit_and_gradient(s.spec, s.start.m);
    CHECK(r.g.norm() < 1e-10 * at_start.g.norm());
}

TEST_CASE("gradient matches central differences")
{
    Rng rng(2);
    for (auto dims : {std::pair<Index, Index>{10, 14}, std::pair<Index, Index>{13, 9}}) {
        const auto s = make_setup(dims.first, dims.second, 4, {4.0, 9.0, 15.0}, 2, 3);
        for (std::size_t w = 0; w < 3; ++w) {
            ShotMisfitSpec one = s.spec;
            one.omegas = {s.spec.omegas[w]};
            one.amps = {s.spec.amps[w]};
            one.targets = {s.spec.targets[w]};
            const RVector& m = s.start.m;
            const RVector d = interior_direction(s.start, rng);
            const double h = 1e-6 * m.cwiseAbs().maxCoeff();
            const auto r = misfit_and_gradient(one, m);
            const double fd = (phi(one, m + h * d) - phi(one, m - h * d)) / (2 * h);
            const double an = r.g.dot(d);
            CHECK(std::abs(fd - an) / std::abs(an) < 1e-5);
        }
    }
}

TEST_CASE("boundary slowness enters the gradient through the absorbing term")
{
    Rng rng(4);
    const auto s = make_setup(9, 11, 4, {7.0}, 2, 5);
    const RVector& m = s.start.m;
    RVector d = RVector::Zero(m.size());
    for (Index ix = 0; ix < s.start.nx; ++ix)
        d[s.start.index(s.start.nz - 1, ix)] = 1.0;
    const double h = 1e-6 * m.cwiseAbs().maxCoeff();
    const double fd = (phi(s.spec, m + h * d) - phi(s.spec, m - h * d)) / (2 * h);
    const double an = misfit_and_gradient(s.spec, m).g.dot(d);
    CHECK(std::abs(fd - an) / std::abs(an) < 1e-5);
}

TEST_CASE("Taylor remainder is second order")
{
    Rng rng(6);
    const auto s = make_setup(12, 16, 5, {5.0, 8.0}, 3, 7);
    const RVector& m = s.start.m;
    const RVector d = interior_direction(s.start, rng);
    const auto r = misfit_and_gradient(s.spec, m);
    const double f0 = r.phi, slope = r.g.dot(d);
    double h = 0.05 * m.cwiseAbs().maxCoeff();
    double prev = std::abs(phi(s.spec, m + h * d) - f0 - h * slope);
    for (int i = 0; i < 3; ++i) {
        h *= 0.5;
        const double e = std::abs(phi(s.spec, m + h * d) - f0 - h * slope);
        const double ratio = prev / e;
        MESSAGE("Taylor ratio ", ratio);
        CHECK(ratio >= 3.5);
        CHECK(ratio <= 4.5);
        prev = e;
    }
}

TEST_CASE("stacked probe blocks add up")
{
    auto s = make_setup(10, 12, 5, {6.0}, 2, 8);
    ShotMisfitSpec other = s.spec;
    other.probes = draw_probes(5, 3, ProbeDistribution::Gaussian, 9);
    other.targets = {s.data[0].data * other.probes.W.cast<Complex>()};

    ShotMisfitSpec stacked = s.spec;
    stacked.probes.W.resize(5, 5);
    stacked.probes.W << s.spec.probes.W, other.probes.W;
    stacked.targets = {s.data[0].data * stacked.probes.W.cast<Complex>()};

    const RVector& m = s.start.m;
    const auto a = misfit_and_gradient(s.spec, m);
    const auto b = misfit_and_gradient(other, m);
    const auto c = misfit_and_gradient(stacked, m);
    // phi carries 1/K, so compare K-weighted sums
    CHECK(std::abs(5 * c.phi - (2 * a.phi + 3 * b.phi)) < 1e-12 * 5 * c.phi);
    CHECK(test::rel_err(5.0 * c.g, 2.0 * a.g + 3.0 * b.g) < 1e-10);
}

TEST_CASE("probe-averaged misfit is unbiased for the all-shot misfit")
{
    auto s = make_setup(10, 12, 6, {6.0}, 1, 0);
    const RVector& m = s.start.m;
    // all-shot residual B = P H^-1 Q - D
    ShotMisfitSpec all = s.spec;
    all.probes.W = RMatrix::Identity(6, 6);
    all.targets = {s.data[0].data};
    const double full = 6.0 * misfit_and_gradient(all, m).phi;  // undo the 1/K with K = Ns

    const int draws = 200;
    double sum = 0.0, sum2 = 0.0;
    for (int j = 0; j < draws; ++j) {
        ShotMisfitSpec one = s.spec;
        one.probes = draw_probes(6, 1, ProbeDistribution::Gaussian, derive_seed(11, j));
        one.targets = {s.data[0].data * one.probes.W.cast<Complex>()};
        const double v = misfit_and_gradient(one, m).phi;
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum2 / draws - mean * mean) / (draws - 1));
    MESSAGE("mean ", mean, " vs ", full, " (se ", se, ")");
    CHECK(std::abs(mean - full) <= 3 * se);
}

TEST_CASE("solve counts and field reuse")
{
    const auto s = make_setup(10, 12, 5, {5.0, 9.0}, 3, 12);
    auto& counter = pde_counter();
    counter.reset();
    misfit_and_gradient(s.spec, s.start.m);
    CHECK(counter.forward == 2 * 3);
    CHECK(counter.adjoint == 2 * 3);

    const auto fields = simulate_shots(s.spec, s.start.m);
    counter.reset();
    const auto reused = misfit_and_gradient(s.spec, s.start.m, &fields);
    CHECK(counter.forward == 0);
    CHECK(counter.adjoint == 2 * 3);
    const auto fresh = misfit_and_gradient(s.spec, s.start.m);
    CHECK(reused.phi == fresh.phi);
    CHECK(reused.g == fresh.g);

    // fields for a different model are ignored
    counter.reset();
    misfit_and_gradient(s.spec, s.truth.m, &fields);
    CHECK(counter.forward == 2 * 3);
}

TEST_CASE("misfit rejects bad inputs")
{
    auto s = make_setup(8, 8, 3, {5.0}, 2, 1);
    RVector bad = s.start.m;
    bad[3] = -1.0;
    CHECK_THROWS_AS(misfit_and_gradient(s.spec, bad), Error);
    s.spec.targets.clear();
    CHECK_THROWS_AS(misfit_and_gradient(s.spec, s.start.m), Error);
}

TEST_CASE("model subproblem")
{
    SUBCASE("iter_cap = 0 leaves the model untouched")
    {
        const auto s = make_setup(8, 10, 4, {5.0}, 2, 1);
        pde_counter().reset();
        MSubproblemOptions opt;
        opt.iter_cap = 0;
        const auto r = solve_m_subproblem(s.spec, s.start.m, opt);
        CHECK(r.m == s.start.m);
        CHECK(pde_counter().total() == 0);
    }
    SUBCASE("noise-free single-frequency toy")
    {
        const auto s = make_setup(10, 20, 8, {6.0}, 8, 2);
        MSubproblemOptions opt;
        opt.iter_cap = 10;
        const auto r = solve_m_subproblem(s.spec, s.start.m, opt);
        const double e0 = (s.start.m - s.truth.m).norm() / s.truth.m.norm();
        const double e1 = (r.m - s.truth.m).norm() / s.truth.m.norm();
        MESSAGE("model error ", e0, " -> ", e1, " (phi ", r.phi0, " -> ", r.phi, ", ",
                std::string(to_string(r.status)), ")");
        CHECK(r.phi < r.phi0);
        CHECK(e1 < e0);
        for (std::size_t i = 1; i < r.log.size(); ++i)
            CHECK(r.log[i].f <= r.log[i - 1].f);
    }
    SUBCASE("box keeps the iterates inside")
    {
        const auto s = make_setup(10, 20, 8, {6.0}, 4, 3);
        MSubproblemOptions opt;
        opt.iter_cap = 5;
        const double lo = s.start.m.minCoeff(), hi = s.start.m.maxCoeff();
        opt.box = std::make_pair(lo, hi);
        const auto r = solve_m_subproblem(s.spec, s.start.m, opt);
        CHECK(r.m.minCoeff() >= lo);
        CHECK(r.m.maxCoeff() <= hi);
        CHECK(r.phi <= r.phi0);
    }
}
