#pragma once

#include "rihvr/grid.hpp"
#include "rihvr/optics.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace rihvr {

using Vec3 = std::array<double, 3>;

struct RodShape {
    Vec3 axis{1.0, 0.0, 0.0};  // unit vector
    double length = 0.0;       // m
};

/// Ground-truth particle. Position in meters: x along columns, y along rows, z depth from sensor.
struct SceneParticle {
    std::uint32_t id = 0;
    Vec3 position{};
    double diameter = 0.0;  // m (rod width for rods)
    double opacity = 1.0;   // amplitude absorbed, [0, 1]
    std::optional<RodShape> rod;
};

struct Scene {
    std::vector<SceneParticle> particles;
    VolumeGeometry geom;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Periodic domain that particle centers live in: x in [0, nx*pitch), y in [0, ny*pitch),
/// z in [z0 - dz/2, z0 + (nz - 1/2) dz).
struct SceneBounds {
    Vec3 lo;
    Vec3 hi;
};
SceneBounds scene_bounds(const VolumeGeometry& g);

/// Voxel coordinates (col, row, plane) of a physical position.
Vec3 to_voxel(const VolumeGeometry& g, const Vec3& position);
Vec3 to_meters(const VolumeGeometry& g, const Vec3& voxel);

/// n spheres uniformly distributed in the scene bounds, reproducible from the seed.
Scene generate_scene(std::size_t n, const VolumeGeometry& geom, double diameter, std::uint64_t seed);

using VelocityField = std::function<Vec3(const Vec3&)>;

/// Position wrapped periodically into scene_bounds.
Vec3 wrap_position(const VolumeGeometry& g, const Vec3& position);

/// One forward-Euler step; positions wrap periodically into the scene bounds.
Scene advect_scene(const Scene& scene, const VelocityField& velocity, double dt);

struct RenderOptions {
    Carrier carrier = Carrier::remove;
};

/// Intensity |1 - sum_p P(-z_p) m_p|^2 of opaque amplitude masks under unit plane-wave
/// illumination. Spheres are disks at their exact depth; rods are voxelized per plane
/// (each plane gets the part of the rod's centerline inside its slab, dilated by half the width).
RPlane render_hologram(const Scene& scene, const RenderOptions& opts = {});

/// Amplitude masks for one particle: (depth, mask) pairs. Exposed for tests and the
/// linear-object comparison.
std::vector<std::pair<double, RPlane>> particle_masks(const SceneParticle& p, const VolumeGeometry& g);

/// White Gaussian noise, clamped at zero.
RPlane add_noise(const RPlane& image, double sigma, std::uint64_t seed);

/// s_d = n_s * L * d^2 (n_s in 1/m^3, depth and diameter in m).
double shadow_density(double number_density, double depth, double diameter);

}  // namespace rihvr
