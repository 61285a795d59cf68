#pragma once

#include "rihvr/metrics.hpp"

#include <cstdint>
#include <string>

namespace rihvr {

enum class Normalization {
    background,  // (I - M) / sqrt(M) with a sliding temporal mean M
    mean,        // I / mean(I) - 1, per frame
};

struct PreprocessConfig {
    Normalization normalization = Normalization::mean;
    std::size_t window = 151;  // frames, odd
};

struct TrackingConfig {
    double max_disp = 70e-6;  // m per frame
    std::size_t min_frames = 10;
    Smoothing smoothing = TvSmoothing{1e-6};  // weight in m
    double frame_interval = 1.0;              // s, converts per-frame rates in the trajectory table
};

struct PathConfig {
    std::string input;   // glob of hologram images (reconstruct)
    std::string output = "out";
};

enum class MotionKind { none, uniform, swirl };

/// Motion of the synthetic scene between frames.
struct MotionConfig {
    MotionKind kind = MotionKind::none;
    Vec3 velocity{0.0, 0.0, 0.0};  // m per frame (uniform drift, also added to swirl)
    double angular_rate = 0.0;     // rad per frame about the volume's z axis (swirl)
};

enum class ImageFormat { f32, png16, tiff16 };

struct SynthesisConfig {
    std::size_t particles = 50;
    double diameter = 20e-6;
    std::size_t frames = 1;
    double noise_sigma = 0.02;
    MotionConfig motion;
    ImageFormat format = ImageFormat::f32;
};

struct PipelineConfig {
    VolumeGeometry geometry{512, 512, 700, 10e-6, 10e-6, 1e-3, 632e-9};
    SolverConfig solver;
    SegmentationConfig segmentation;
    TrackingConfig tracking;
    PreprocessConfig preprocessing;
    PathConfig paths;
    SynthesisConfig synthesis;
    MatchTolerance tolerance;
    std::uint64_t seed = 1;
    int workers = 1;

    /// Throws std::invalid_argument describing the first violated constraint.
    void validate() const;
};

/// Nested JSON text. Missing keys take defaults; unknown keys are rejected.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::string& path);
std::string serialize_config(const PipelineConfig& cfg);

bool operator==(const PipelineConfig& a, const PipelineConfig& b);

}  // namespace rihvr
