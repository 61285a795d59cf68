#pragma once

#include "rihvr/config.hpp"

#include <string>
#include <vector>

namespace rihvr {

/// Scene of frame `frame` under the configured motion; the motion is evaluated in closed form
/// from the initial scene so positions do not accumulate integration error. Positions wrap
/// periodically into the scene bounds.
Scene scene_at_frame(const Scene& initial, const MotionConfig& motion, std::size_t frame);

/// synthesize: initial scene from the seed, one noisy hologram per frame in
/// <output>/holograms/, and the ground truth in <output>/truth.tsv.
void run_synthesize(const PipelineConfig& cfg);

/// reconstruct: holograms matching paths.input -> <output>/volumes/*.rihv,
/// <output>/objective/*.tsv and <output>/particles.tsv.
void run_reconstruct(const PipelineConfig& cfg);

/// track: <output>/particles.tsv -> <output>/trajectories.tsv.
void run_track(const PipelineConfig& cfg);

/// evaluate: truth, particles and trajectories -> <output>/metrics.tsv and <output>/errors.tsv.
void run_evaluate(const PipelineConfig& cfg);

/// Output file locations used by the subcommands.
struct OutputLayout {
    std::string root;
    std::string holograms() const { return root + "/holograms"; }
    std::string volumes() const { return root + "/volumes"; }
    std::string objective() const { return root + "/objective"; }
    std::string truth() const { return root + "/truth.tsv"; }
    std::string particles() const { return root + "/particles.tsv"; }
    std::string trajectories() const { return root + "/trajectories.tsv"; }
    std::string metrics() const { return root + "/metrics.tsv"; }
    std::string errors() const { return root + "/errors.tsv"; }
    std::string config() const { return root + "/config.json"; }
};

}  // namespace rihvr
