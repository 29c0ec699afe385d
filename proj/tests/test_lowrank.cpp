#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <Eigen/SVD>

#include "jfwi/acquisition.hpp"
#include "jfwi/lowrank.hpp"
#include "jfwi/midoff.hpp"
#include "jfwi/probes.hpp"
#include "support.hpp"

using namespace jfwi;

namespace {

/// Slice whose midpoint-offset image is exactly rank r (off-support entries
/// of the generating matrix are discarded by T*).
CMatrix midoff_low_rank(Index n, Index r, Rng& rng, bool real = false)
{
    const Index order = 2 * n - 1;
    CMatrix a = test::random_complex(order, r, rng);
    CMatrix b = test::random_complex(r, order, rng);
    if (real) {
        a = a.real().cast<Complex>();
        b = b.real().cast<Complex>();
    }
    return from_midoff(a * b, n, n);
}

CompletionProblem problem_for(const CMatrix& full, double keep, std::uint64_t seed, Index k)
{
    CompletionProblem p;
    p.data = apply_mask(make_mask(full.rows(), full.cols(), keep, seed),
                        FrequencySlice{1.0, Domain::SourceReceiver, full});
    p.rank_cap = k;
    return p;
}

Factorization random_factors(Index order, Index k, Rng& rng)
{
    return {test::random_complex(order, k, rng), test::random_complex(k, order, rng), 0.0};
}

double nuclear_norm(const CMatrix& a)
{
    return Eigen::JacobiSVD<CMatrix>(a).singularValues().sum();
}

}  // namespace

TEST_CASE("residual at the zero iterate is ||D_s||^2")
{
    Rng rng(1);
    auto p = problem_for(test::random_complex(6, 6, rng), 0.5, 2, 3);
    const Factorization zero{CMatrix::Zero(11, 3), CMatrix::Zero(3, 11), 0.0};
    CHECK(residual(p, zero) == doctest::Approx(p.data.observed.data.squaredNorm()));
}

TEST_CASE("residual of a truncated SVD on fully observed data")
{
    Rng rng(2);
    const CMatrix d = test::random_complex(6, 6, rng);
    auto p = problem_for(d, 1.0, 1, 4);
    const CMatrix y = to_midoff(d);
    Eigen::JacobiSVD<CMatrix> svd(y, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Factorization f = init_factors({1.0, Domain::MidpointOffset, y}, 4);
    const CMatrix lr = svd.matrixU().leftCols(4) *
                       svd.singularValues().head(4).cast<Complex>().asDiagonal() *
                       svd.matrixV().leftCols(4).adjoint();
    CHECK(test::rel_err(f.product(), lr) < 1e-10);

    // oracle: tail restricted to the checkerboard support
    const MaskMatrix support = midoff_support(6, 6);
    const double on_support = apply_mask_to(support, lr - y).squaredNorm();
    const double tail = svd.singularValues().tail(svd.singularValues().size() - 4).squaredNorm();
    const double r = residual(p, f);
    CHECK(r == doctest::Approx(on_support).epsilon(1e-10));
    CHECK(r <= tail * (1 + 1e-12));
}

TEST_CASE("shot term vanishes when FW matches the factorization")
{
    Rng rng(3);
    auto p = problem_for(test::random_complex(5, 5, rng), 0.6, 4, 2);
    const auto f = random_factors(9, 2, rng);
    const auto probes = draw_probes(5, 3, ProbeDistribution::Gaussian, 8);
    const double data_only = residual(p, f);
    p.lambda = 2.5;
    p.shots = SimulatedShots{completed_data(p, f) * probes.W.cast<Complex>(), probes.W};
    CHECK(residual(p, f) == doctest::Approx(data_only).epsilon(1e-12));

    p.shots->FW.setZero();
    CHECK(residual(p, f) > data_only);
}

TEST_CASE("problem validation")
{
    Rng rng(4);
    auto p = problem_for(test::random_complex(4, 4, rng), 0.5, 1, 2);
    p.lambda = 1.0;
    CHECK_THROWS_AS(p.validate(), Error);
    p.lambda = 0.0;
    p.rank_cap = 0;
    CHECK_THROWS_AS(p.validate(), Error);
    p.rank_cap = 2;
    const Factorization wrong{CMatrix::Zero(5, 2), CMatrix::Zero(2, 7), 0.0};
    CHECK_THROWS_AS(residual(p, wrong), Error);
}

TEST_CASE("gradient vanishes at an exact fit")
{
    Rng rng(5);
    const auto f = random_factors(9, 2, rng);
    const CMatrix d = from_midoff(f.product(), 5, 5);
    const auto p = problem_for(d, 1.0, 1, 2);
    const auto g = residual_gradient(p, f);
    CHECK(g.gL.norm() < 1e-12 * f.L.norm());
    CHECK(g.gR.norm() < 1e-12 * f.R.norm());
}

TEST_CASE("gradient matches central finite differences")
{
    Rng rng(6);
    for (int trial = 0; trial < 5; ++trial) {
        auto p = problem_for(test::random_complex(6, 6, rng), 0.5, 10 + trial, 3);
        if (trial % 2 == 1) {
            const auto probes = draw_probes(6, 2, ProbeDistribution::Gaussian, trial);
            p.lambda = 0.7;
            p.shots = SimulatedShots{test::random_complex(6, 2, rng), probes.W};
        }
        const auto f = random_factors(11, 3, rng);
        const Factorization dir = random_factors(11, 3, rng);
        const auto g = residual_gradient(p, f);
        const double h = 1e-5;
        Factorization fp = f, fm = f;
        fp.L += h * dir.L;
        fp.R += h * dir.R;
        fm.L -= h * dir.L;
        fm.R -= h * dir.R;
        const double fd = (residual(p, fp) - residual(p, fm)) / (2 * h);
        const double an = real_dot(g.gL, dir.L) + real_dot(g.gR, dir.R);
        CHECK(std::abs(fd - an) / std::abs(an) < 1e-6);
    }
}

TEST_CASE("gradient is bilinear in the factors for a fixed misfit")
{
    Rng rng(7);
    auto p = problem_for(test::random_complex(5, 5, rng), 0.7, 2, 2);
    const auto f = random_factors(9, 2, rng);
    const Factorization scaled{0.5 * f.L, 2.0 * f.R, 0.0};  // same product
    const auto g = residual_gradient(p, f);
    const auto gs = residual_gradient(p, scaled);
    CHECK(test::rel_err(gs.gL, 2.0 * g.gL) < 1e-12);
    CHECK(test::rel_err(gs.gR, 0.5 * g.gR) < 1e-12);
}

TEST_CASE("ball projection")
{
    Factorization f{CMatrix::Constant(2, 1, 2.0), CMatrix::Zero(1, 2), 0.0};
    CHECK(f.norm_sum() == 4.0);
    f.R = CMatrix::Constant(1, 2, 2.0);
    CHECK(f.norm_sum() == 8.0);
    const auto p = project_ball(f, 2.0);
    CHECK(test::rel_err(p.L, 0.5 * f.L) < 1e-15);
    CHECK(test::rel_err(p.R, 0.5 * f.R) < 1e-15);
    CHECK(std::abs(p.norm_sum() - 2.0) < 1e-12);
    CHECK(p.tau == 2.0);

    const auto inside = project_ball(f, 10.0);
    CHECK(inside.L == f.L);
    CHECK(inside.R == f.R);

    Rng rng(8);
    for (int t = 0; t < 10; ++t) {
        const auto r = random_factors(7, 3, rng);
        const double tau = 0.1 + rng.uniform() * r.norm_sum();
        CHECK(std::abs(project_ball(r, tau).norm_sum() - tau) < 1e-12 * std::max(1.0, tau));
    }
    CHECK_THROWS_AS(project_ball(f, -1.0), Error);
}

TEST_CASE("lasso at tau = 0 returns the origin")
{
    Rng rng(9);
    auto p = problem_for(test::random_complex(5, 5, rng), 0.6, 3, 2);
    const auto probes = draw_probes(5, 2, ProbeDistribution::Gaussian, 1);
    p.lambda = 1.0;
    p.shots = SimulatedShots{test::random_complex(5, 2, rng), probes.W};
    const auto res = solve_lasso(p, 0.0, random_factors(9, 2, rng));
    CHECK(res.F.L.norm() == 0.0);
    CHECK(res.F.R.norm() == 0.0);
    const double expect =
        p.data.observed.data.squaredNorm() + 0.5 * p.lambda * p.shots->FW.squaredNorm();
    CHECK(res.v == doctest::Approx(expect).epsilon(1e-14));
}

// Observed support entries as edges between midpoint rows and offset
// columns. A rank-1 midpoint-offset matrix is pinned down by its samples only
// when each checkerboard parity class forms one connected component.
int observation_components(const MaskMatrix& mask)
{
    const MidOffMap map(mask.rows(), mask.cols());
    const Index n = map.order();
    std::vector<Index> parent(std::size_t(2 * n));
    std::iota(parent.begin(), parent.end(), Index(0));
    auto find = [&](Index a) {
        while (parent[std::size_t(a)] != a)
            a = parent[std::size_t(a)] = parent[std::size_t(parent[std::size_t(a)])];
        return a;
    };
    for (Index c = 0; c < mask.cols(); ++c)
        for (Index r = 0; r < mask.rows(); ++r)
            if (mask(r, c))
                parent[std::size_t(find(map.mid(r, c)))] = find(n + map.off(r, c));
    int comps = 0;
    for (Index a = 0; a < 2 * n; ++a)
        comps += find(a) == a;
    return comps;
}

TEST_CASE("lasso recovers a rank-1 real matrix with a generous radius")
{
    Rng rng(10);
    const Index n = 16;
    const CMatrix full = midoff_low_rank(n, 1, rng, true);
    std::uint64_t seed = 1;
    while (observation_components(make_mask(n, n, 0.6, seed)) != 2)
        ++seed;
    MESSAGE("first identifiable mask seed ", seed);
    auto p = problem_for(full, 0.6, seed, 2);
    const auto start = init_factors(to_midoff(p.data.observed), 2);
    SpgOptions opt;
    opt.max_iter = 5000;
    const double tau = 10.0 * nuclear_norm(to_midoff(full));
    const auto res = solve_lasso(p, tau, start, opt);
    const double err = test::rel_err(completed_data(p, res.F), full);
    MESSAGE("rank-1 lasso relative error ", err, " after ", res.iterations, " iterations");
    CHECK(err < 1e-4);
    CHECK(res.F.norm_sum() <= tau + 1e-12);
}

TEST_CASE("lasso residual respects the nonmonotone window and the ball")
{
    Rng rng(11);
    const CMatrix full = midoff_low_rank(10, 2, rng);
    auto p = problem_for(full, 0.5, 6, 3);
    const auto start = init_factors(to_midoff(p.data.observed), 3);
    const double tau = 0.5 * start.norm_sum();
    SpgOptions opt;
    const auto res = solve_lasso(p, tau, start, opt);
    const auto& h = res.history;
    for (std::size_t i = 1; i < h.size(); ++i) {
        const std::size_t lo = i >= std::size_t(opt.memory) ? i - std::size_t(opt.memory) : 0;
        const double ref = *std::max_element(h.begin() + long(lo), h.begin() + long(i));
        CHECK(h[i] <= ref);
    }
    CHECK(res.F.norm_sum() <= tau + 1e-12);
    CHECK(res.v == *std::min_element(h.begin(), h.end()));
}

TEST_CASE("value function decreases along warm-started radii")
{
    Rng rng(12);
    const CMatrix full = midoff_low_rank(10, 2, rng);
    auto p = problem_for(full, 0.5, 7, 3);
    Factorization f = init_factors(to_midoff(p.data.observed), 3);
    const double t0 = f.norm_sum();
    double prev = std::numeric_limits<double>::infinity();
    for (double s : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const auto res = solve_lasso(p, s * t0, f);
        CHECK(res.v <= prev);
        prev = res.v;
        f = res.F;
    }
}

TEST_CASE("completion returns the origin when it is already feasible")
{
    Rng rng(13);
    auto p = problem_for(test::random_complex(5, 5, rng), 0.6, 1, 2);
    p.epsilon = p.data.observed.data.squaredNorm();
    const auto res = solve_completion(p, random_factors(9, 2, rng));
    CHECK(res.status == CompletionStatus::ZeroFeasible);
    CHECK(res.F.L.norm() == 0.0);
    CHECK(res.F.R.norm() == 0.0);
}

TEST_CASE("completion hits the residual budget on a 50%-masked low-rank slice")
{
    Rng rng(14);
    const CMatrix full = midoff_low_rank(30, 2, rng);
    auto p = problem_for(full, 0.5, 9, 2);
    p.epsilon = 1e-4 * p.data.observed.data.squaredNorm();
    RootOptions opt;
    const auto res = solve_completion(p, init_factors(to_midoff(p.data.observed), 2), opt);
    MESSAGE("status ", std::string(to_string(res.status)), ", v = ", res.v, ", eps = ", p.epsilon);
    CHECK(res.status == CompletionStatus::Converged);
    CHECK(std::abs(res.v - p.epsilon) <= opt.root_tol * p.epsilon);

    auto sorted = res.trace;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.tau < b.tau; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        CHECK(sorted[i].v <= sorted[i - 1].v);
    CHECK(nuclear_norm(res.F.product()) <= res.F.norm_sum() + 1e-8);
    CHECK(res.F.norm_sum() <= res.F.tau + 1e-12);
}

TEST_CASE("init_factors")
{
    Rng rng(15);
    const auto zero = init_factors({1.0, Domain::MidpointOffset, CMatrix::Zero(7, 7)}, 3);
    CHECK(zero.L.norm() == 0.0);
    CHECK(zero.R.norm() == 0.0);

    const CMatrix d = test::random_complex(7, 7, rng);
    const auto full = init_factors({1.0, Domain::MidpointOffset, d}, 7);
    CHECK(test::rel_err(full.product(), d) < 1e-9);

    const CMatrix r1 = test::random_complex(7, 1, rng) * test::random_complex(1, 7, rng);
    const auto one = init_factors({1.0, Domain::MidpointOffset, r1}, 1);
    CHECK(test::rel_err(one.product(), r1) < 1e-9);
    // balanced factors: nuclear norm bound is tight for an SVD split
    CHECK(one.norm_sum() == doctest::Approx(nuclear_norm(r1)).epsilon(1e-10));
    CHECK_THROWS_AS(init_factors({1.0, Domain::MidpointOffset, d}, 8), Error);
}

TEST_CASE("nuclear norm never exceeds the factor bound")
{
    Rng rng(16);
    for (int t = 0; t < 10; ++t) {
        const auto f = random_factors(9, 1 + t % 4, rng);
        CHECK(nuclear_norm(f.product()) <= f.norm_sum() + 1e-8);
    }
}

TEST_CASE("completion quality improves with more observations")
{
    double snr[3] = {0, 0, 0};
    const double keeps[3] = {0.5, 0.25, 0.15};
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(100 + seed);
        const CMatrix full = midoff_low_rank(16, 3, rng);
        for (int i = 0; i < 3; ++i) {
            auto p = problem_for(full, keeps[i], 200 + seed, 5);
            p.epsilon = default_epsilon(p.data);
            RootOptions opt;
            const auto res =
                solve_completion(p, init_factors(to_midoff(p.data.observed), 5), opt);
            const double err = test::rel_err(completed_data(p, res.F), full);
            snr[i] += -20.0 * std::log10(std::max(err, 1e-15)) / 5.0;
        }
    }
    MESSAGE("mean SNR at keep 0.5/0.25/0.15: ", snr[0], " ", snr[1], " ", snr[2]);
    CHECK(snr[0] >= snr[1]);
    CHECK(snr[1] >= snr[2]);
}

TEST_CASE("convergence log CSV")
{
    const auto path = std::filesystem::temp_directory_path() / "jfwi_conv.csv";
    write_convergence_csv(path, {{0, 1.0, 2.0, 3.0}, {1, 1.0, 1.5, 0.5}});
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    CHECK(header == "iter,tau,v_tau,grad_norm");
}
