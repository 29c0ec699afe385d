#include "jfwi/joint.hpp"

#include <algorithm>
#include <cmath>

#include "jfwi/helmholtz.hpp"
#include "jfwi/metrics.hpp"
#include "jfwi/midoff.hpp"
#include "jfwi/random.hpp"

namespace jfwi {

void JointConfig::validate(const std::vector<SliceData>& slices, const ModelGrid& m0) const
{
    validate_model(m0);
    validate_survey(survey, m0);
    if (bands.empty())
        throw Error(ErrorKind::EmptySchedule, "no frequency bands");
    double prev_low = 0.0;
    for (const auto& band : bands) {
        if (band.empty())
            throw Error(ErrorKind::EmptySchedule, "empty frequency band");
        const double low = *std::min_element(band.begin(), band.end());
        if (low < prev_low)
            throw Error(ErrorKind::BadSpec, "bands must run from low to high frequency");
        prev_low = low;
        for (double w : band) {
            const bool found = std::any_of(slices.begin(), slices.end(),
                                           [&](const SliceData& s) { return s.omega() == w; });
            if (!found)
                throw Error(ErrorKind::BadSpec, "band frequency without a data slice");
        }
    }
    for (const auto& s : slices) {
        const auto& d = s.observed.observed.data;
        require_shape(d.rows(), d.cols(), survey.num_receivers(), survey.num_sources(),
                      "data slice");
        if (s.truth)
            require_shape(s.truth->rows(), s.truth->cols(), d.rows(), d.cols(), "true slice");
    }
    if (num_probes < 1)
        throw Error(ErrorKind::BadShape, "need at least one probe");
    if (outer_iters < 0 || lambda < 0.0 || eps_rel < 0.0 || rank_cap < 0)
        throw Error(ErrorKind::BadSpec, "negative iteration count, lambda, eps or rank");
    if (truth)
        require_shape(truth->nz, truth->nx, m0.nz, m0.nx, "true model");
}

std::uint64_t outer_iteration_pde_count(Index num_probes, std::size_t num_omegas, int evals,
                                        bool fields_reused)
{
    const std::uint64_t per = std::uint64_t(num_probes) * num_omegas;
    if (fields_reused)
        return per * (evals == 0 ? 1 : 2 * std::uint64_t(evals));
    return per * 2 * std::uint64_t(evals);
}

ModelGrid frequency_continuation(const std::vector<std::vector<double>>& bands,
                                 const ModelGrid& m0, const BandRunner& runner)
{
    if (bands.empty())
        throw Error(ErrorKind::EmptySchedule, "no frequency bands");
    ModelGrid m = m0;
    for (std::size_t b = 0; b < bands.size(); ++b)
        m = runner(b, bands[b], m);
    return m;
}

std::vector<int> split_iterations(int outer_iters, std::size_t num_bands)
{
    std::vector<int> out(num_bands, 0);
    if (num_bands == 0)
        return out;
    const int base = outer_iters / int(num_bands);
    const int rem = outer_iters % int(num_bands);
    for (std::size_t b = 0; b < num_bands; ++b)
        out[b] = base + (int(b) < rem ? 1 : 0);
    return out;
}

namespace {

std::size_t slice_of(const std::vector<SliceData>& slices, double omega)
{
    for (std::size_t i = 0; i < slices.size(); ++i)
        if (slices[i].omega() == omega)
            return i;
    throw Error(ErrorKind::BadSpec, "no slice at the requested frequency");
}

ShotMisfitSpec band_spec(const JointConfig& cfg, const ModelGrid& m,
                         const std::vector<double>& omegas, const ProbeBlock& W)
{
    ShotMisfitSpec spec;
    spec.grid = m;
    spec.survey = cfg.survey;
    spec.omegas = omegas;
    for (double w : omegas)
        spec.amps.push_back(ricker_amplitude(cfg.wavelet, w / (2.0 * M_PI)));
    spec.probes = W;
    spec.bc = cfg.bc;
    return spec;
}

Index rank_for(const JointConfig& cfg)
{
    return cfg.rank_cap > 0 ? cfg.rank_cap
                            : default_rank_cap(cfg.survey.num_sources(), cfg.survey.num_receivers());
}

CompletionProblem problem_for(const JointConfig& cfg, const SliceData& s, Index rank)
{
    CompletionProblem p;
    p.data = s.observed;
    p.epsilon = default_epsilon(s.observed, cfg.eps_rel);
    p.rank_cap = std::min(rank, p.order());
    return p;
}

// Completion with one 2x relaxation of epsilon on BudgetTooTight.
CompletionResult complete(CompletionProblem& p, const Factorization& start,
                          const RootOptions& opt, bool& relaxed)
{
    auto res = solve_completion(p, start, opt);
    if (res.status == CompletionStatus::BudgetTooTight) {
        p.epsilon *= 2.0;
        relaxed = true;
        res = solve_completion(p, res.F, opt);
    }
    return res;
}

void score(const JointConfig& cfg, const std::vector<SliceData>& slices, const JointState& st,
           IterationMetrics& mt)
{
    if (cfg.truth)
        mt.model_error = model_error(*cfg.truth, st.m);
    mt.snr.clear();
    for (std::size_t i = 0; i < slices.size(); ++i)
        mt.snr.push_back(slices[i].truth && slices[i].truth->norm() > 0.0
                             ? snr_db(*slices[i].truth, st.completed[i])
                             : std::numeric_limits<double>::quiet_NaN());
}

void start_iteration(const JointConfig& cfg, JointState& st, IterationMetrics& mt, std::size_t b)
{
    ++st.k;
    mt.iter = st.k;
    mt.band = int(b);
    mt.probe_seed = derive_seed(cfg.seed, std::uint64_t(st.k));
    st.W = draw_probes(cfg.survey.num_sources(), cfg.num_probes, cfg.distribution,
                       mt.probe_seed);
}

}  // namespace

JointState joint_invert(const JointConfig& cfg, const std::vector<SliceData>& slices,
                        const ModelGrid& m0)
{
    cfg.validate(slices, m0);
    const Index rank = rank_for(cfg);

    JointState st;
    st.m = m0;
    for (const auto& s : slices) {
        const auto p = problem_for(cfg, s, rank);
        st.factors.push_back(init_factors(to_midoff(s.observed.observed), p.rank_cap));
        st.completed.push_back(completed_data(p, st.factors.back()));
    }
    if (cfg.outer_iters == 0)
        return st;

    const auto iters = split_iterations(cfg.outer_iters, cfg.bands.size());
    auto runner = [&](std::size_t b, const std::vector<double>& omegas, const ModelGrid& m) {
        st.m = m;
        for (int it = 0; it < iters[b]; ++it) {
            IterationMetrics mt;
            start_iteration(cfg, st, mt, b);
            const std::uint64_t pde0 = pde_counter().total();

            ShotMisfitSpec spec = band_spec(cfg, st.m, omegas, st.W);
            const auto fields = simulate_shots(spec, st.m.m);
            for (std::size_t j = 0; j < omegas.size(); ++j) {
                const std::size_t i = slice_of(slices, omegas[j]);
                auto p = problem_for(cfg, slices[i], rank);
                p.lambda = cfg.lambda;
                if (cfg.lambda > 0.0)
                    p.shots = SimulatedShots{fields.FW[j], st.W.W};
                mt.completion_before += residual(p, st.factors[i]);
                const auto res = complete(p, st.factors[i], cfg.joint_root, mt.eps_relaxed);
                mt.completion_after += residual(p, res.F);
                mt.completion_status.push_back(res.status);
                st.factors[i] = res.F;
                st.completed[i] = completed_data(p, res.F);
                spec.targets.push_back(st.completed[i] * st.W.W.cast<Complex>());
            }

            const auto ms = solve_m_subproblem(spec, st.m.m, cfg.msub, &fields);
            st.m.m = ms.m;
            mt.phi0 = ms.phi0;
            mt.phi = ms.phi;
            mt.msub_status = ms.status;
            mt.msub_evaluations = ms.evaluations;
            mt.pde_count = pde_counter().total() - pde0;
            mt.pde_expected =
                outer_iteration_pde_count(cfg.num_probes, omegas.size(), ms.evaluations, true);
            score(cfg, slices, st, mt);
            st.history.push_back(std::move(mt));
        }
        return st.m;
    };
    st.m = frequency_continuation(cfg.bands, m0, runner);
    return st;
}

JointState simultaneous_shot_fwi(const JointConfig& cfg, const std::vector<SliceData>& slices,
                                 const std::vector<CMatrix>& data, const ModelGrid& m0)
{
    cfg.validate(slices, m0);
    if (data.size() != slices.size())
        throw Error(ErrorKind::ShapeMismatch, "one complete slice per observed slice");
    for (std::size_t i = 0; i < data.size(); ++i)
        require_shape(data[i].rows(), data[i].cols(), slices[i].observed.observed.data.rows(),
                      slices[i].observed.observed.data.cols(), "complete slice");

    JointState st;
    st.m = m0;
    st.completed = data;
    if (cfg.outer_iters == 0)
        return st;

    const auto iters = split_iterations(cfg.outer_iters, cfg.bands.size());
    auto runner = [&](std::size_t b, const std::vector<double>& omegas, const ModelGrid& m) {
        st.m = m;
        for (int it = 0; it < iters[b]; ++it) {
            IterationMetrics mt;
            start_iteration(cfg, st, mt, b);
            const std::uint64_t pde0 = pde_counter().total();

            ShotMisfitSpec spec = band_spec(cfg, st.m, omegas, st.W);
            for (double w : omegas)
                spec.targets.push_back(data[slice_of(slices, w)] * st.W.W.cast<Complex>());
            const auto ms = solve_m_subproblem(spec, st.m.m, cfg.msub);
            st.m.m = ms.m;
            mt.phi0 = ms.phi0;
            mt.phi = ms.phi;
            mt.msub_status = ms.status;
            mt.msub_evaluations = ms.evaluations;
            mt.pde_count = pde_counter().total() - pde0;
            mt.pde_expected =
                outer_iteration_pde_count(cfg.num_probes, omegas.size(), ms.evaluations, false);
            score(cfg, slices, st, mt);
            st.history.push_back(std::move(mt));
        }
        return st.m;
    };
    st.m = frequency_continuation(cfg.bands, m0, runner);
    return st;
}

JointState disjoint_invert(const JointConfig& cfg, const std::vector<SliceData>& slices,
                           const ModelGrid& m0)
{
    cfg.validate(slices, m0);
    const Index rank = rank_for(cfg);

    std::vector<Factorization> factors;
    std::vector<CMatrix> completed;
    std::vector<CompletionStatus> status;
    bool relaxed = false;
    for (const auto& s : slices) {
        auto p = problem_for(cfg, s, rank);
        const auto res = complete(p, init_factors(to_midoff(s.observed.observed), p.rank_cap),
                                  cfg.root, relaxed);
        factors.push_back(res.F);
        completed.push_back(completed_data(p, res.F));
        status.push_back(res.status);
    }

    JointState st = simultaneous_shot_fwi(cfg, slices, completed, m0);
    st.factors = std::move(factors);
    for (auto& mt : st.history) {
        mt.completion_status = status;
        mt.eps_relaxed = relaxed;
    }
    return st;
}

}  // namespace jfwi
