#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "jfwi/joint.hpp"
#include "jfwi/metrics.hpp"

namespace jfwi {

enum class Pipeline { Full, Disjoint, Joint, Both };
const char* to_string(Pipeline p);
Pipeline parse_pipeline(const std::string& s);

struct ExperimentConfig {
    Index nz = 60;
    Index nx = 120;
    double h = 20.0;
    /// layered:N[:vtop:vbottom] | lens:N:contrast[:vtop:vbottom] | file:path
    std::string truth = "lens:4:-400:1500:3000";
    Index num_sources = 40;
    Index num_receivers = 40;
    Index survey_row = 1;
    /// Negative: receivers on the source row.
    Index receiver_row = 5;
    /// Hz, low to high; bands index into this list by value.
    std::vector<std::vector<double>> bands_hz = {{3.0, 5.0}, {7.0, 10.0}};
    double f_peak = 15.0;
    double keep = 0.5;
    MaskPattern mask_pattern = MaskPattern::Entries;
    Index num_probes = 4;
    ProbeDistribution distribution = ProbeDistribution::Gaussian;
    Index rank_cap = 0;
    double lambda = 1.0;
    double eps_rel = 1e-3;
    int outer_iters = 10;
    int iter_cap = 5;
    int lbfgs_memory = 10;
    /// Velocity bounds (m/s) for the model updates; unset = unconstrained.
    std::optional<std::pair<double, double>> velocity_box = std::make_pair(1400.0, 5000.0);
    int spg_max_iter = 200;
    double root_tol = 1e-2;
    int max_root_iter = 10;
    /// Caps of the partial (L, R) update inside each joint iteration.
    int joint_spg_max_iter = 20;
    int joint_max_root_iter = 3;
    Boundary bc = Boundary::Absorbing;
    std::uint64_t seed = 1;
    Pipeline pipeline = Pipeline::Both;
    std::filesystem::path out = "out";

    /// Distinct band frequencies in Hz, ascending.
    std::vector<double> frequencies_hz() const;
    void validate() const;
};

/// Applies one `key = value` setting; throws BadSpec on unknown keys or
/// unparsable values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Flat key=value text, '#' starts a comment, keys case-sensitive.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Deterministic synthetic squared-slowness model from a truth spec.
ModelGrid make_truth(const std::string& spec, Index nz, Index nx, double h);

/// Depth-linear velocity between the truth's top-row and bottom-row mean
/// velocities, as squared slowness.
ModelGrid make_initial(const ModelGrid& truth);

/// Everything the pipelines consume, built from a config.
struct Problem {
    ModelGrid truth;
    ModelGrid initial;
    Survey survey;
    std::vector<SliceData> slices;
    JointConfig joint;
};

Problem build_problem(const ExperimentConfig& cfg);

struct PipelineOutcome {
    Pipeline pipeline = Pipeline::Full;
    JointState state;
    double initial_error = 0.0;
    double final_error = 0.0;
    std::vector<double> snr;
    std::uint64_t pde_total = 0;
};

/// Full, Disjoint or Joint (not Both).
PipelineOutcome run_pipeline(const Problem& problem, Pipeline p);

/// Runs the configured pipeline(s) and writes all artifacts under cfg.out.
/// Progress lines go to `log`.
void run_experiment(const ExperimentConfig& cfg, std::ostream& log);

/// Plain-text PGM (P2) of a model's velocity, scaled linearly from vmin..vmax.
void write_pgm(const std::filesystem::path& path, const ModelGrid& g, double vmin, double vmax);

}  // namespace jfwi
