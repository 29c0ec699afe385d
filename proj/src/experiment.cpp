#include "jfwi/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "jfwi/helmholtz.hpp"
#include "jfwi/jfm.hpp"
#include "jfwi/random.hpp"

namespace jfwi {

const char* to_string(Pipeline p)
{
    switch (p) {
    case Pipeline::Full: return "full";
    case Pipeline::Disjoint: return "disjoint";
    case Pipeline::Joint: return "joint";
    case Pipeline::Both: return "both";
    }
    return "unknown";
}

Pipeline parse_pipeline(const std::string& s)
{
    for (Pipeline p : {Pipeline::Full, Pipeline::Disjoint, Pipeline::Joint, Pipeline::Both})
        if (s == to_string(p))
            return p;
    throw Error(ErrorKind::BadSpec, "unknown pipeline '" + s + "'");
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep))
        out.push_back(trim(cur));
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text)
{
    const std::string s = trim(text);
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw Error(ErrorKind::BadSpec, "bad value for " + key + ": '" + text + "'");
    return v;
}

std::string hz_label(double f)
{
    std::ostringstream os;
    os << f;
    return os.str();
}

}  // namespace

std::vector<double> ExperimentConfig::frequencies_hz() const
{
    std::vector<double> f;
    for (const auto& b : bands_hz)
        f.insert(f.end(), b.begin(), b.end());
    std::sort(f.begin(), f.end());
    f.erase(std::unique(f.begin(), f.end()), f.end());
    return f;
}

void ExperimentConfig::validate() const
{
    if (nz < 3 || nx < 3 || !(h > 0.0))
        throw Error(ErrorKind::BadSpec, "grid must be at least 3x3 with h > 0");
    if (!(keep > 0.0 && keep <= 1.0))
        throw Error(ErrorKind::BadRatio, "keep ratio must lie in (0, 1]");
    if (bands_hz.empty())
        throw Error(ErrorKind::EmptySchedule, "no frequency bands");
    for (const auto& b : bands_hz) {
        if (b.empty())
            throw Error(ErrorKind::EmptySchedule, "empty frequency band");
        for (double f : b)
            if (!(f > 0.0))
                throw Error(ErrorKind::BadSpec, "frequencies must be positive");
    }
    if (num_sources < 1 || num_receivers < 1 || num_probes < 1)
        throw Error(ErrorKind::BadSpec, "need sources, receivers and probes");
    if (outer_iters < 0 || iter_cap < 0 || lbfgs_memory < 1 || spg_max_iter < 1 ||
        max_root_iter < 1 || joint_spg_max_iter < 1 || joint_max_root_iter < 1 || rank_cap < 0)
        throw Error(ErrorKind::BadSpec, "iteration counts out of range");
    if (lambda < 0.0 || eps_rel < 0.0 || !(root_tol > 0.0) || !(f_peak > 0.0))
        throw Error(ErrorKind::BadSpec, "lambda, eps_rel, root_tol or f_peak out of range");
    if (velocity_box && !(velocity_box->first > 0.0 && velocity_box->first < velocity_box->second))
        throw Error(ErrorKind::BadSpec, "velocity_box needs 0 < vmin < vmax");
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value)
{
    const std::string v = trim(value);
    if (key == "nz")
        cfg.nz = parse_number<Index>(key, v);
    else if (key == "nx")
        cfg.nx = parse_number<Index>(key, v);
    else if (key == "h")
        cfg.h = parse_number<double>(key, v);
    else if (key == "truth")
        cfg.truth = v;
    else if (key == "sources")
        cfg.num_sources = parse_number<Index>(key, v);
    else if (key == "receivers")
        cfg.num_receivers = parse_number<Index>(key, v);
    else if (key == "survey_row")
        cfg.survey_row = parse_number<Index>(key, v);
    else if (key == "receiver_row")
        cfg.receiver_row = parse_number<Index>(key, v);
    else if (key == "bands") {
        cfg.bands_hz.clear();
        for (const auto& band : split(v, ';')) {
            std::vector<double> b;
            for (const auto& f : split(band, ','))
                b.push_back(parse_number<double>(key, f));
            cfg.bands_hz.push_back(std::move(b));
        }
    } else if (key == "f_peak")
        cfg.f_peak = parse_number<double>(key, v);
    else if (key == "keep")
        cfg.keep = parse_number<double>(key, v);
    else if (key == "mask") {
        if (v == "entries")
            cfg.mask_pattern = MaskPattern::Entries;
        else if (v == "columns")
            cfg.mask_pattern = MaskPattern::Columns;
        else
            throw Error(ErrorKind::BadSpec, "mask must be entries or columns");
    } else if (key == "probes")
        cfg.num_probes = parse_number<Index>(key, v);
    else if (key == "probe_dist") {
        if (v == "gaussian")
            cfg.distribution = ProbeDistribution::Gaussian;
        else if (v == "rademacher")
            cfg.distribution = ProbeDistribution::Rademacher;
        else
            throw Error(ErrorKind::BadSpec, "probe_dist must be gaussian or rademacher");
    } else if (key == "rank")
        cfg.rank_cap = parse_number<Index>(key, v);
    else if (key == "lambda")
        cfg.lambda = parse_number<double>(key, v);
    else if (key == "eps_rel")
        cfg.eps_rel = parse_number<double>(key, v);
    else if (key == "outer_iters")
        cfg.outer_iters = parse_number<int>(key, v);
    else if (key == "iter_cap")
        cfg.iter_cap = parse_number<int>(key, v);
    else if (key == "lbfgs_memory")
        cfg.lbfgs_memory = parse_number<int>(key, v);
    else if (key == "velocity_box") {
        if (v == "none")
            cfg.velocity_box.reset();
        else {
            const auto parts = split(v, ',');
            if (parts.size() != 2)
                throw Error(ErrorKind::BadSpec, "velocity_box must be 'vmin,vmax' or 'none'");
            cfg.velocity_box = std::make_pair(parse_number<double>(key, parts[0]),
                                              parse_number<double>(key, parts[1]));
        }
    } else if (key == "spg_max_iter")
        cfg.spg_max_iter = parse_number<int>(key, v);
    else if (key == "root_tol")
        cfg.root_tol = parse_number<double>(key, v);
    else if (key == "max_root_iter")
        cfg.max_root_iter = parse_number<int>(key, v);
    else if (key == "joint_spg_max_iter")
        cfg.joint_spg_max_iter = parse_number<int>(key, v);
    else if (key == "joint_max_root_iter")
        cfg.joint_max_root_iter = parse_number<int>(key, v);
    else if (key == "boundary") {
        if (v == "absorbing")
            cfg.bc = Boundary::Absorbing;
        else if (v == "neumann")
            cfg.bc = Boundary::Neumann;
        else
            throw Error(ErrorKind::BadSpec, "boundary must be absorbing or neumann");
    } else if (key == "seed")
        cfg.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "pipeline")
        cfg.pipeline = parse_pipeline(v);
    else if (key == "out")
        cfg.out = v;
    else
        throw Error(ErrorKind::BadSpec, "unknown config key '" + key + "'");
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base)
{
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::BadSpec,
                        "line " + std::to_string(lineno) + ": expected key = value");
        apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base)
{
    std::ifstream is(path);
    if (!is)
        throw Error(ErrorKind::Io, "cannot open config " + path.string());
    return parse_config(is, std::move(base));
}

ModelGrid make_truth(const std::string& spec, Index nz, Index nx, double h)
{
    const auto parts = split(spec, ':');
    if (parts.empty())
        throw Error(ErrorKind::BadSpec, "empty truth spec");

    if (parts[0] == "file") {
        if (parts.size() < 2)
            throw Error(ErrorKind::BadSpec, "file truth needs a path");
        const std::string path = spec.substr(spec.find(':') + 1);
        const RMatrix m = jfm::read_real(path);
        ModelGrid g{m.rows(), m.cols(), h, m.reshaped()};
        validate_model(g);
        return g;
    }

    const bool lens = parts[0] == "lens";
    if (!lens && parts[0] != "layered")
        throw Error(ErrorKind::BadSpec, "truth spec must start with layered, lens or file");
    const std::size_t base = lens ? 3 : 2;
    if (parts.size() < base || (parts.size() != base && parts.size() != base + 2))
        throw Error(ErrorKind::BadSpec, "malformed truth spec '" + spec + "'");

    const int layers = parse_number<int>("layers", parts[1]);
    const double contrast = lens ? parse_number<double>("contrast", parts[2]) : 0.0;
    const double vtop = parts.size() > base ? parse_number<double>("vtop", parts[base]) : 1500.0;
    const double vbot =
        parts.size() > base ? parse_number<double>("vbottom", parts[base + 1]) : 3000.0;
    if (layers < 1)
        throw Error(ErrorKind::BadSpec, "need at least one layer");

    ModelGrid g = constant_model(nz, nx, h, vtop);
    const double cz = 0.55 * double(nz - 1), cx = 0.5 * double(nx - 1);
    const double radius = 0.2 * double(std::min(nz, nx));
    for (Index ix = 0; ix < nx; ++ix)
        for (Index iz = 0; iz < nz; ++iz) {
            const int layer = int(iz * layers / nz);
            double v = layers == 1 ? vtop : vtop + (vbot - vtop) * layer / double(layers - 1);
            const double dz = double(iz) - cz, dx = double(ix) - cx;
            if (lens && dz * dz + dx * dx <= radius * radius)
                v += contrast;
            if (!(v >= 1500.0 && v <= 4500.0))
                throw Error(ErrorKind::BadSpec, "truth velocities must lie in [1500, 4500] m/s");
            g.m[g.index(iz, ix)] = 1.0 / (v * v);
        }
    return g;
}

ModelGrid make_initial(const ModelGrid& truth)
{
    validate_model(truth);
    const RMatrix v = truth.as_image().cwiseSqrt().cwiseInverse();
    const double vt = v.row(0).mean(), vb = v.row(truth.nz - 1).mean();
    ModelGrid g = truth;
    for (Index ix = 0; ix < truth.nx; ++ix)
        for (Index iz = 0; iz < truth.nz; ++iz) {
            const double t = truth.nz > 1 ? double(iz) / double(truth.nz - 1) : 0.0;
            const double vel = vt + (vb - vt) * t;
            g.m[g.index(iz, ix)] = 1.0 / (vel * vel);
        }
    return g;
}

Problem build_problem(const ExperimentConfig& cfg)
{
    cfg.validate();
    Problem p;
    p.truth = make_truth(cfg.truth, cfg.nz, cfg.nx, cfg.h);
    p.initial = make_initial(p.truth);
    p.survey = line_survey(p.truth, cfg.num_sources, cfg.num_receivers, cfg.survey_row,
                           cfg.receiver_row);

    // one trace mask shared by every frequency
    const MaskMatrix mask = make_mask(cfg.num_receivers, cfg.num_sources, cfg.keep,
                                      derive_seed(cfg.seed, 0x6d61736bull), cfg.mask_pattern);
    const RickerSource wavelet{cfg.f_peak};
    for (double f : cfg.frequencies_hz()) {
        const FrequencySlice full = forward_data(p.truth, p.survey, 2.0 * M_PI * f,
                                                 ricker_amplitude(wavelet, f), cfg.bc);
        p.slices.push_back({apply_mask(mask, full), full.data});
    }

    JointConfig& j = p.joint;
    j.survey = p.survey;
    for (const auto& band : cfg.bands_hz) {
        std::vector<double> w;
        for (double f : band)
            w.push_back(2.0 * M_PI * f);
        j.bands.push_back(std::move(w));
    }
    j.wavelet = wavelet;
    j.num_probes = cfg.num_probes;
    j.distribution = cfg.distribution;
    j.lambda = cfg.lambda;
    j.eps_rel = cfg.eps_rel;
    j.rank_cap = cfg.rank_cap;
    j.outer_iters = cfg.outer_iters;
    j.msub.iter_cap = cfg.iter_cap;
    j.msub.memory = cfg.lbfgs_memory;
    if (cfg.velocity_box) {
        const auto [vlo, vhi] = *cfg.velocity_box;
        j.msub.box = std::make_pair(1.0 / (vhi * vhi), 1.0 / (vlo * vlo));
    }
    j.root.root_tol = cfg.root_tol;
    j.root.max_root_iter = cfg.max_root_iter;
    j.root.spg.max_iter = cfg.spg_max_iter;
    j.joint_root.root_tol = cfg.root_tol;
    j.joint_root.max_root_iter = cfg.joint_max_root_iter;
    j.joint_root.spg.max_iter = cfg.joint_spg_max_iter;
    j.seed = cfg.seed;
    j.bc = cfg.bc;
    j.truth = p.truth;
    return p;
}

PipelineOutcome run_pipeline(const Problem& problem, Pipeline pipeline)
{
    PipelineOutcome out;
    out.pipeline = pipeline;
    const std::uint64_t pde0 = pde_counter().total();
    switch (pipeline) {
    case Pipeline::Full: {
        std::vector<CMatrix> data;
        for (const auto& s : problem.slices)
            data.push_back(*s.truth);
        out.state = simultaneous_shot_fwi(problem.joint, problem.slices, data, problem.initial);
        break;
    }
    case Pipeline::Disjoint:
        out.state = disjoint_invert(problem.joint, problem.slices, problem.initial);
        break;
    case Pipeline::Joint:
        out.state = joint_invert(problem.joint, problem.slices, problem.initial);
        break;
    case Pipeline::Both:
        throw Error(ErrorKind::BadSpec, "run_pipeline takes a single pipeline");
    }
    out.pde_total = pde_counter().total() - pde0;
    out.initial_error = model_error(problem.truth, problem.initial);
    out.final_error = model_error(problem.truth, out.state.m);
    for (std::size_t i = 0; i < problem.slices.size(); ++i)
        out.snr.push_back(snr_db(*problem.slices[i].truth, out.state.completed[i]));
    return out;
}

void write_pgm(const std::filesystem::path& path, const ModelGrid& g, double vmin, double vmax)
{
    std::ofstream os(path);
    if (!os)
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    os << "P2\n" << g.nx << ' ' << g.nz << "\n255\n";
    const double span = vmax > vmin ? vmax - vmin : 1.0;
    for (Index iz = 0; iz < g.nz; ++iz) {
        for (Index ix = 0; ix < g.nx; ++ix) {
            const double v = 1.0 / std::sqrt(g.m[g.index(iz, ix)]);
            const long level = std::lround(std::clamp((v - vmin) / span, 0.0, 1.0) * 255.0);
            os << level << (ix + 1 < g.nx ? ' ' : '\n');
        }
    }
}

void run_experiment(const ExperimentConfig& cfg, std::ostream& log)
{
    const Problem problem = build_problem(cfg);
    std::filesystem::create_directories(cfg.out);
    const auto& out = cfg.out;

    const RMatrix vel = problem.truth.as_image().cwiseSqrt().cwiseInverse();
    const double vmin = vel.minCoeff(), vmax = vel.maxCoeff();
    jfm::write(out / "truth.jfm", problem.truth);
    jfm::write(out / "initial.jfm", problem.initial);
    write_pgm(out / "truth.pgm", problem.truth, vmin, vmax);
    write_pgm(out / "initial.pgm", problem.initial, vmin, vmax);
    write_survey_csv(out / "survey.csv", problem.survey, problem.truth);

    const auto freqs = cfg.frequencies_hz();
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const std::string stem = "slice_" + hz_label(freqs[i]);
        jfm::write(out / (stem + "_true.jfm"), *problem.slices[i].truth);
        jfm::write(out / (stem + "_observed.jfm"), problem.slices[i].observed.observed.data);
    }

    std::vector<Pipeline> runs;
    if (cfg.pipeline == Pipeline::Both)
        runs = {Pipeline::Disjoint, Pipeline::Joint};
    else
        runs = {cfg.pipeline};

    std::ofstream hist(out / "history.csv");
    std::ofstream comp(out / "comparison.csv");
    if (!hist || !comp)
        throw Error(ErrorKind::Io, "cannot write CSV output in " + out.string());
    hist << std::setprecision(17);
    comp << std::setprecision(17);
    hist << "iter,pipeline,phi,model_error";
    comp << "pipeline,seed,keep,probes,outer_iters,initial_error,model_error";
    for (double f : freqs) {
        hist << ",snr_" << hz_label(f) << "hz";
        comp << ",snr_" << hz_label(f) << "hz";
    }
    hist << ",pde_count,band,probe_seed,pde_expected\n";
    comp << ",pde_total\n";

    for (Pipeline p : runs) {
        log << to_string(p) << ": running " << cfg.outer_iters << " outer iterations\n";
        const auto r = run_pipeline(problem, p);
        const std::string name = to_string(p);
        jfm::write(out / ("final_" + name + ".jfm"), r.state.m);
        write_pgm(out / ("final_" + name + ".pgm"), r.state.m, vmin, vmax);
        const std::string suffix = runs.size() > 1 ? "_" + name : "";
        for (std::size_t i = 0; i < freqs.size(); ++i)
            jfm::write(out / ("slice_" + hz_label(freqs[i]) + "_recovered" + suffix + ".jfm"),
                       r.state.completed[i]);

        for (const auto& mt : r.state.history) {
            hist << mt.iter << ',' << name << ',' << mt.phi << ',' << mt.model_error;
            for (double s : mt.snr)
                hist << ',' << s;
            hist << ',' << mt.pde_count << ',' << mt.band << ',' << mt.probe_seed << ','
                 << mt.pde_expected << '\n';
            log << "  iter " << mt.iter << " band " << mt.band << " phi " << mt.phi
                << " model_error " << mt.model_error << " pde " << mt.pde_count << '\n';
        }
        comp << name << ',' << cfg.seed << ',' << cfg.keep << ',' << cfg.num_probes << ','
             << cfg.outer_iters << ',' << r.initial_error << ',' << r.final_error;
        for (double s : r.snr)
            comp << ',' << s;
        comp << ',' << r.pde_total << '\n';
        log << name << ": model error " << r.initial_error << " -> " << r.final_error << '\n';
    }
    if (!hist || !comp)
        throw Error(ErrorKind::Io, "failed writing CSV output in " + out.string());
}

}  // namespace jfwi
