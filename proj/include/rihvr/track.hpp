#pragma once

#include "rihvr/synth.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace rihvr {

/// One particle found in one frame.
struct Detection {
    std::uint32_t id = 0;
    Vec3 position{};
    std::optional<Vec3> orientation;
};

using DetectionFrame = std::vector<Detection>;

struct TrackSample {
    std::size_t frame = 0;
    std::uint32_t detection = 0;
    Vec3 position{};
    std::optional<Vec3> orientation;
};

struct Trajectory {
    std::uint32_t id = 0;
    std::vector<TrackSample> samples;  // consecutive frames

    std::size_t length() const { return samples.size(); }
    /// Per-sample displacement per frame: central differences inside, one-sided at the ends.
    std::vector<Vec3> velocities() const;
    void check_invariants() const;
};

/// Frame-to-frame linking by greedy mutual nearest neighbours. Links longer than max_disp
/// are rejected; a detection that is not linked starts a new trajectory. No gap closing.
/// Ties go to the lower id. frames[f] holds the detections of frame first_frame + f.
std::vector<Trajectory> link_frames(const std::vector<DetectionFrame>& frames, double max_disp,
                                    std::size_t first_frame = 0);

std::vector<Trajectory> filter_min_duration(std::vector<Trajectory> trajs, std::size_t min_frames);

struct SavitzkyGolay {
    int window = 20;
    int order = 2;
};

struct TvSmoothing {
    double weight = 1.0;
};

using Smoothing = std::variant<SavitzkyGolay, TvSmoothing>;

/// Replaces positions with filtered values; frames are untouched. A track shorter than the
/// Savitzky-Golay window is returned unchanged (with a warning on stderr).
Trajectory smooth_trajectory(const Trajectory& traj, const Smoothing& method);

/// Least-squares polynomial smoothing. Near the ends the window is shifted to stay inside
/// the signal and the local polynomial is evaluated off-center.
std::vector<double> savitzky_golay(std::span<const double> y, int window, int order);

/// Exact minimizer of 0.5*||x - y||^2 + weight * sum |x[i+1] - x[i]| (Condat's direct algorithm).
std::vector<double> tv_denoise_1d(std::span<const double> y, double weight);

/// |dp/dt| per sample in 1/s after flipping each orientation into the hemisphere of its predecessor.
std::vector<double> rotation_rate(const Trajectory& traj, double frame_interval);

}  // namespace rihvr
