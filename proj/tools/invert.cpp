// invert: run the full / disjoint / joint pipelines on a synthetic model.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "jfwi/experiment.hpp"

namespace {

int exit_code(jfwi::ErrorKind kind)
{
    using jfwi::ErrorKind;
    switch (kind) {
    case ErrorKind::BadSpec:
    case ErrorKind::BadRatio:
    case ErrorKind::EmptySchedule:
        return 2;
    case ErrorKind::Io:
        return 3;
    case ErrorKind::BadShape:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::WrongDomain:
        return 4;
    default:
        return 5;
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Joint low-rank interpolation and simultaneous-shot FWI"};
    std::optional<std::string> config, pipeline, out;
    std::optional<double> keep;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    app.add_option("--config", config, "key = value config file");
    app.add_option("--pipeline", pipeline, "full | disjoint | joint | both");
    app.add_option("--keep", keep, "fraction of traces observed");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out", out, "output directory");
    app.add_flag("-q,--quiet", quiet, "no progress output");
    CLI11_PARSE(app, argc, argv);

    try {
        jfwi::ExperimentConfig cfg;
        if (config)
            cfg = jfwi::load_config(*config);
        if (pipeline)
            cfg.pipeline = jfwi::parse_pipeline(*pipeline);
        if (keep)
            cfg.keep = *keep;
        if (seed)
            cfg.seed = *seed;
        if (out)
            cfg.out = *out;

        std::ostream null_stream(nullptr);
        jfwi::run_experiment(cfg, quiet ? null_stream : std::cout);
    } catch (const jfwi::Error& e) {
        std::cerr << "invert: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "invert: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
