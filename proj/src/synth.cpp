#include "rihvr/synth.hpp"

#include "rihvr/fft.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>
#include <stdexcept>

namespace rihvr {

namespace {

double wrap_into(double v, double lo, double hi)
{
    const double period = hi - lo;
    double r = std::fmod(v - lo, period);
    if (r < 0.0) r += period;
    // fmod can return `period` itself after rounding
    if (r >= period) r = 0.0;
    return lo + r;
}

/// Signed periodic pixel offset in [-n/2, n/2).
double wrap_offset(double d, std::size_t n)
{
    const double nn = static_cast<double>(n);
    d = std::fmod(d, nn);
    if (d < -0.5 * nn) d += nn;
    if (d >= 0.5 * nn) d -= nn;
    return d;
}

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

RPlane disk_mask(const VolumeGeometry& g, double cx, double cy, double radius_px, double value)
{
    RPlane mask(g.ny, g.nx);
    bool any = false;
    if (radius_px >= 0.5) {
        const long reach = static_cast<long>(std::ceil(radius_px)) + 1;
        const long ci = static_cast<long>(std::floor(cy));
        const long cj = static_cast<long>(std::floor(cx));
        for (long di = -reach; di <= reach + 1; ++di) {
            for (long dj = -reach; dj <= reach + 1; ++dj) {
                const long i = ci + di;
                const long j = cj + dj;
                const auto ii = static_cast<std::size_t>(((i % static_cast<long>(g.ny)) + g.ny) % g.ny);
                const auto jj = static_cast<std::size_t>(((j % static_cast<long>(g.nx)) + g.nx) % g.nx);
                const double ox = wrap_offset(static_cast<double>(jj) - cx, g.nx);
                const double oy = wrap_offset(static_cast<double>(ii) - cy, g.ny);
                if (ox * ox + oy * oy <= radius_px * radius_px) {
                    mask(ii, jj) = value;
                    any = true;
                }
            }
        }
    }
    if (!any) {
        const auto ii = static_cast<std::size_t>(std::lround(cy)) % g.ny;
        const auto jj = static_cast<std::size_t>(std::lround(cx)) % g.nx;
        mask(ii, jj) = value;
    }
    return mask;
}

/// Pixels within radius of the lateral segment centered at (cx, cy) with half-extent (hx, hy), all in pixels.
RPlane segment_mask(const VolumeGeometry& g, double cx, double cy, double hx, double hy, double radius_px, double value)
{
    RPlane mask(g.ny, g.nx);
    const double h2 = hx * hx + hy * hy;
    const long reach = static_cast<long>(std::ceil(std::sqrt(h2) + radius_px)) + 1;
    const long ci = static_cast<long>(std::floor(cy));
    const long cj = static_cast<long>(std::floor(cx));
    for (long di = -reach; di <= reach + 1; ++di) {
        for (long dj = -reach; dj <= reach + 1; ++dj) {
            const auto ii = static_cast<std::size_t>((((ci + di) % static_cast<long>(g.ny)) + g.ny) % g.ny);
            const auto jj = static_cast<std::size_t>((((cj + dj) % static_cast<long>(g.nx)) + g.nx) % g.nx);
            const double qx = wrap_offset(static_cast<double>(jj) - cx, g.nx);
            const double qy = wrap_offset(static_cast<double>(ii) - cy, g.ny);
            double t = h2 > 0.0 ? (qx * hx + qy * hy) / h2 : 0.0;
            t = std::clamp(t, -1.0, 1.0);
            const double ex = qx - t * hx;
            const double ey = qy - t * hy;
            if (ex * ex + ey * ey <= radius_px * radius_px) mask(ii, jj) = value;
        }
    }
    return mask;
}

void warn_small(const SceneParticle& p)
{
    std::cerr << "warning: particle " << p.id << " diameter " << p.diameter
              << " m is below the pixel pitch; clamped to a single-pixel mask\n";
}

}  // namespace

void Scene::validate() const
{
    geom.validate();
    const auto b = scene_bounds(geom);
    for (const auto& p : particles) {
        for (int a = 0; a < 3; ++a) {
            if (!(p.position[a] >= b.lo[a] && p.position[a] < b.hi[a]))
                throw std::invalid_argument("particle " + std::to_string(p.id) + " lies outside the volume");
        }
        if (!(p.diameter > 0.0)) throw std::invalid_argument("particle diameter must be positive");
        if (p.opacity < 0.0 || p.opacity > 1.0) throw std::invalid_argument("particle opacity must be in [0, 1]");
        if (p.rod) {
            if (std::abs(norm3(p.rod->axis) - 1.0) > 1e-9) throw std::invalid_argument("rod axis must be a unit vector");
            if (!(p.rod->length > 0.0)) throw std::invalid_argument("rod length must be positive");
        }
    }
}

SceneBounds scene_bounds(const VolumeGeometry& g)
{
    return {{0.0, 0.0, g.z0 - 0.5 * g.dz},
            {static_cast<double>(g.nx) * g.pitch, static_cast<double>(g.ny) * g.pitch,
             g.z0 + (static_cast<double>(g.nz) - 0.5) * g.dz}};
}

Vec3 to_voxel(const VolumeGeometry& g, const Vec3& p)
{
    return {p[0] / g.pitch, p[1] / g.pitch, (p[2] - g.z0) / g.dz};
}

Vec3 to_meters(const VolumeGeometry& g, const Vec3& v)
{
    return {v[0] * g.pitch, v[1] * g.pitch, g.z0 + v[2] * g.dz};
}

Scene generate_scene(std::size_t n, const VolumeGeometry& geom, double diameter, std::uint64_t seed)
{
    geom.validate();
    Scene scene;
    scene.geom = geom;
    scene.rng_seed = seed;
    const auto b = scene_bounds(geom);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    scene.particles.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SceneParticle p;
        p.id = static_cast<std::uint32_t>(i);
        for (int a = 0; a < 3; ++a) p.position[a] = wrap_into(b.lo[a] + unit(rng) * (b.hi[a] - b.lo[a]), b.lo[a], b.hi[a]);
        p.diameter = diameter;
        scene.particles.push_back(p);
    }
    return scene;
}

Scene advect_scene(const Scene& scene, const VelocityField& velocity, double dt)
{
    if (!(dt > 0.0)) throw std::invalid_argument("advect_scene: dt must be positive");
    Scene out = scene;
    for (auto& p : out.particles) {
        const Vec3 u = velocity(p.position);
        p.position = wrap_position(scene.geom, {p.position[0] + dt * u[0], p.position[1] + dt * u[1], p.position[2] + dt * u[2]});
    }
    return out;
}

Vec3 wrap_position(const VolumeGeometry& g, const Vec3& position)
{
    const auto b = scene_bounds(g);
    Vec3 out;
    for (int a = 0; a < 3; ++a) out[a] = wrap_into(position[a], b.lo[a], b.hi[a]);
    return out;
}

std::vector<std::pair<double, RPlane>> particle_masks(const SceneParticle& p, const VolumeGeometry& g)
{
    std::vector<std::pair<double, RPlane>> out;
    const double cx = p.position[0] / g.pitch;
    const double cy = p.position[1] / g.pitch;
    double radius_px = 0.5 * p.diameter / g.pitch;
    if (p.diameter < g.pitch) {
        warn_small(p);
        radius_px = 0.0;
    }

    if (!p.rod) {
        out.emplace_back(p.position[2], disk_mask(g, cx, cy, radius_px, p.opacity));
        return out;
    }

    const Vec3& axis = p.rod->axis;
    const double half = 0.5 * p.rod->length;
    const double za = p.position[2] - half * axis[2];
    const double zb = p.position[2] + half * axis[2];
    const double zlo = std::min(za, zb);
    const double zhi = std::max(za, zb);
    radius_px = std::max(radius_px, 0.5);

    auto emit = [&](double s0, double s1) {
        // centerline parameter s in [-half, half]
        const double sm = 0.5 * (s0 + s1);
        const double sh = 0.5 * (s1 - s0);
        const double mx = cx + sm * axis[0] / g.pitch;
        const double my = cy + sm * axis[1] / g.pitch;
        const double depth = p.position[2] + sm * axis[2];
        out.emplace_back(depth, segment_mask(g, mx, my, sh * axis[0] / g.pitch, sh * axis[1] / g.pitch, radius_px,
                                             p.opacity));
    };

    const long k_lo = static_cast<long>(std::floor((zlo - g.z0) / g.dz + 0.5));
    const long k_hi = static_cast<long>(std::floor((zhi - g.z0) / g.dz + 0.5));
    if (k_lo == k_hi || std::abs(axis[2]) < 1e-12) {
        emit(-half, half);
        return out;
    }
    for (long k = k_lo; k <= k_hi; ++k) {
        const double slab_lo = g.z0 + (static_cast<double>(k) - 0.5) * g.dz;
        const double slab_hi = slab_lo + g.dz;
        // centerline z(s) = position.z + s * axis.z
        double s0 = (slab_lo - p.position[2]) / axis[2];
        double s1 = (slab_hi - p.position[2]) / axis[2];
        if (s0 > s1) std::swap(s0, s1);
        s0 = std::max(s0, -half);
        s1 = std::min(s1, half);
        if (s1 > s0) emit(s0, s1);
    }
    return out;
}

RPlane render_hologram(const Scene& scene, const RenderOptions& opts)
{
    scene.validate();
    const auto& g = scene.geom;
    const std::size_t np = g.plane_size();
    const Fft2D fft(g.ny, g.nx);
    const std::size_t block = 16;
    const std::size_t nblocks = (scene.particles.size() + block - 1) / block;
    std::vector<CPlane> partial(nblocks, CPlane(g.ny, g.nx));

    const double dfx = 1.0 / (static_cast<double>(g.nx) * g.pitch);
    const double dfy = 1.0 / (static_cast<double>(g.ny) * g.pitch);

#pragma omp parallel for schedule(dynamic)
    for (long b = 0; b < static_cast<long>(nblocks); ++b) {
        CPlane buf(g.ny, g.nx);
        const std::size_t end = std::min(scene.particles.size(), (static_cast<std::size_t>(b) + 1) * block);
        for (std::size_t i = static_cast<std::size_t>(b) * block; i < end; ++i) {
            for (const auto& [depth, mask] : particle_masks(scene.particles[i], g)) {
                for (std::size_t n = 0; n < np; ++n) buf.data[n] = mask.data[n];
                fft.forward(buf.span());
                auto& acc = partial[b];
                for (std::size_t r = 0; r < g.ny; ++r) {
                    const double fy = static_cast<double>(frequency_index(r, g.ny)) * dfy;
                    for (std::size_t c = 0; c < g.nx; ++c) {
                        const double fx = static_cast<double>(frequency_index(c, g.nx)) * dfx;
                        acc(r, c) += transfer_function(fx, fy, -depth, g.wavelength, opts.carrier) * buf(r, c);
                    }
                }
            }
        }
    }

    CPlane scattered(g.ny, g.nx);
    for (const auto& p : partial)
        for (std::size_t n = 0; n < np; ++n) scattered.data[n] += p.data[n];
    fft.inverse(scattered.span());

    RPlane out(g.ny, g.nx);
    for (std::size_t n = 0; n < np; ++n) out.data[n] = std::norm(Complex(1.0, 0.0) - scattered.data[n]);
    return out;
}

RPlane add_noise(const RPlane& image, double sigma, std::uint64_t seed)
{
    if (sigma < 0.0) throw std::invalid_argument("add_noise: sigma must be >= 0");
    RPlane out = image;
    if (sigma == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sigma);
    for (auto& v : out.data) v = std::max(0.0, v + normal(rng));
    return out;
}

double shadow_density(double number_density, double depth, double diameter)
{
    if (number_density < 0.0 || depth < 0.0 || diameter < 0.0)
        throw std::invalid_argument("shadow_density: inputs must be non-negative");
    // (n d)(L d): balanced pairing keeps the operands near unity scale
    return (number_density * diameter) * (depth * diameter);
}

}  // namespace rihvr
