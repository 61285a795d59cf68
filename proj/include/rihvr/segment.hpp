#pragma once

#include "rihvr/sparse_volume.hpp"
#include "rihvr/synth.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace rihvr {

struct Voxel {
    std::uint32_t col = 0;
    std::uint32_t row = 0;
    std::uint32_t plane = 0;
    double intensity = 0.0;  // modulus of the reconstruction
};

struct AxisEstimate {
    Vec3 axis{1.0, 0.0, 0.0};  // unit; largest-magnitude component positive
    double elongation = 1.0;   // sqrt(lambda1 / lambda2)
    bool reliable = true;      // false when the two leading eigenvalues coincide
};

/// Connected set of voxels. Coordinates are voxel units (x = col, y = row, z = plane).
struct Blob {
    std::vector<Voxel> voxels;  // sorted by (plane, row, col)
    Vec3 centroid{};
    double peak = 0.0;
    std::optional<AxisEstimate> orientation;

    std::size_t volume() const { return voxels.size(); }
};

struct SegmentationConfig {
    double rel_tol = 2.0 / 256.0;
    std::size_t min_vox = 5;
    /// Physical voxel extents used for principal axes; empty skips orientation.
    std::optional<Vec3> axis_scale;
};

/// Drops entries with modulus < rel_tol * (max modulus).
SparseVolume threshold_volume(const SparseVolume& v, double rel_tol);

/// 26-connected components of the stored voxels, with centroids and peaks filled in.
std::vector<Blob> connected_components(const SparseVolume& v);

/// Keeps blobs with more than min_vox voxels.
std::vector<Blob> filter_min_volume(std::vector<Blob> blobs, std::size_t min_vox);

/// Intensity-weighted mean voxel position. Throws std::domain_error if all intensities are zero.
Vec3 weighted_centroid(const Blob& blob);

/// Leading eigenvector of the intensity-weighted position covariance, positions scaled by
/// `scale` (e.g. physical voxel size). Requires two voxels with positive intensity.
AxisEstimate principal_axis(const Blob& blob, const Vec3& scale = {1.0, 1.0, 1.0});

/// threshold -> components -> min-volume filter -> optional orientation.
std::vector<Blob> segment(const SparseVolume& v, const SegmentationConfig& cfg);

}  // namespace rihvr
