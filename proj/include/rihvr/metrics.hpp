#pragma once

#include "rihvr/segment.hpp"
#include "rihvr/solver.hpp"
#include "rihvr/synth.hpp"
#include "rihvr/track.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace rihvr {

/// Matching window in voxels: lateral radius and axial half-height.
struct MatchTolerance {
    double lateral = 2.0;
    double axial = 8.0;
};

struct MatchPair {
    std::size_t truth = 0;
    std::size_t detected = 0;
    Vec3 error{};  // detected - truth, voxels
};

struct MatchReport {
    std::vector<MatchPair> pairs;
    std::size_t truth_count = 0;
    std::size_t detected_count = 0;
    std::size_t false_positives = 0;
    double extraction_rate = 0.0;  // matched / truth_count

    /// Absolute errors along axis (0 = x, 1 = y, 2 = z).
    std::vector<double> abs_errors(int axis) const;
};

/// Greedy nearest-neighbour matching in ascending normalized distance
/// sqrt((dx^2 + dy^2) / lateral^2 + dz^2 / axial^2) <= 1. Each truth and each detection is used once.
MatchReport match_particles(std::span<const Vec3> truth, std::span<const Vec3> detected, const MatchTolerance& tol);

/// Empirical percentile with linear interpolation between order statistics (q in [0, 100]).
double percentile(std::vector<double> values, double q);

/// Percentile of the absolute error along one axis; throws on an empty report.
double error_percentile(const MatchReport& report, int axis, double q);

/// RMS over every trajectory sample of the per-frame velocity component along axis,
/// in trajectory position units per frame.
double rms_velocity(const std::vector<Trajectory>& trajs, int axis);

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Rod orientation rate for high aspect ratio: p' = Omega p + S p - p (p . S p).
Vec3 jeffery_rate(const Vec3& p, const Mat3& omega, const Mat3& strain);

// --- synthetic evaluation ------------------------------------------------------

enum class Method { rihvr, baseline };

struct EvaluationSetup {
    VolumeGeometry geom;
    double diameter = 20e-6;
    double noise_sigma = 0.02;
    SolverConfig solver;
    SegmentationConfig segmentation;
    double baseline_threshold = 0.3;
    SegmentationConfig baseline_segmentation{0.0, 0, {}};
    MatchTolerance tolerance;
    std::uint64_t seed = 1;
};

/// Residual b = I - 1 of a rendered, noisy hologram of `scene`.
RPlane synthetic_residual(const Scene& scene, double noise_sigma, std::uint64_t noise_seed);

/// Reconstructs b with the chosen method and returns the segmented blobs.
std::vector<Blob> detect(const HoloOperator& op, const RPlane& b, Method method, const EvaluationSetup& setup);

/// Voxel-unit truth positions of a scene.
std::vector<Vec3> truth_voxels(const Scene& scene);
std::vector<Vec3> blob_centroids(const std::vector<Blob>& blobs);

struct SweepPoint {
    double concentration = 0.0;  // particles per pixel
    std::vector<double> trial_ep;
    double mean_ep = 0.0;
};

/// For each concentration renders `trials` holograms (particle count = concentration * nx * ny),
/// runs the method, and reports the mean extraction rate.
std::vector<SweepPoint> concentration_sweep(std::span<const double> concentrations, const EvaluationSetup& setup,
                                            Method method, int trials);

}  // namespace rihvr
