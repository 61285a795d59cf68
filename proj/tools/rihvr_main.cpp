#include "rihvr/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> output;
};

void add_common(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config, "pipeline configuration (JSON)");
    cmd->add_option("--seed", o.seed, "override the configuration seed");
    cmd->add_option("--workers", o.workers, "frames processed concurrently");
    cmd->add_option("--output", o.output, "output directory");
}

rihvr::PipelineConfig resolve(const Overrides& o)
{
    rihvr::PipelineConfig cfg = o.config.empty() ? rihvr::PipelineConfig{} : rihvr::load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.workers) cfg.workers = *o.workers;
    if (o.output) cfg.paths.output = *o.output;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Regularized inverse holographic volume reconstruction"};
    app.require_subcommand(1);
    Overrides o;

    auto* synth = app.add_subcommand("synthesize", "render a synthetic particle scene and its holograms");
    auto* recon = app.add_subcommand("reconstruct", "reconstruct holograms into sparse volumes and particles");
    auto* track = app.add_subcommand("track", "link particles into smoothed trajectories");
    auto* eval = app.add_subcommand("evaluate", "compare particles and trajectories with the ground truth");
    auto* show = app.add_subcommand("config", "print the resolved configuration");
    for (auto* cmd : {synth, recon, track, eval, show}) add_common(cmd, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        const auto cfg = resolve(o);
        if (synth->parsed()) rihvr::run_synthesize(cfg);
        if (recon->parsed()) rihvr::run_reconstruct(cfg);
        if (track->parsed()) rihvr::run_track(cfg);
        if (eval->parsed()) rihvr::run_evaluate(cfg);
        if (show->parsed()) std::cout << rihvr::serialize_config(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
