#include "rihvr/segment.hpp"
#include "rihvr/solver.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

using namespace rihvr;

namespace {

using Coord = std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>;  // (col, row, plane)
using Partition = std::set<std::set<Coord>>;

VolumeGeometry geom(std::size_t nx, std::size_t ny, std::size_t nz)
{
    return {nx, ny, nz, 10e-6, 10e-6, 10e-6, 632e-9};
}

SparseVolume volume_of(const VolumeGeometry& g, const std::vector<std::pair<Coord, double>>& voxels)
{
    std::vector<CPlane> dense(g.nz, CPlane(g.ny, g.nx));
    for (const auto& [c, v] : voxels) dense[std::get<2>(c)](std::get<1>(c), std::get<0>(c)) = v;
    SparseVolume out(g);
    for (std::size_t k = 0; k < g.nz; ++k) out.planes[k] = from_dense(dense[k]);
    return out;
}

Blob blob_of(const std::vector<std::pair<Coord, double>>& voxels)
{
    Blob b;
    for (const auto& [c, v] : voxels) b.voxels.push_back({std::get<0>(c), std::get<1>(c), std::get<2>(c), v});
    return b;
}

Partition partition_of(const std::vector<Blob>& blobs)
{
    Partition p;
    for (const auto& b : blobs) {
        std::set<Coord> s;
        for (const auto& v : b.voxels) s.insert({v.col, v.row, v.plane});
        p.insert(s);
    }
    return p;
}

/// Breadth-first flood fill over a dense occupancy grid with the 26-neighbourhood.
Partition flood_fill_oracle(const SparseVolume& v)
{
    const auto& g = v.geom;
    std::vector<int> label(g.voxel_count(), -1);
    std::vector<char> occupied(g.voxel_count(), 0);
    auto at = [&](long c, long r, long k) { return (static_cast<std::size_t>(k) * g.ny + r) * g.nx + c; };
    for (std::size_t k = 0; k < g.nz; ++k)
        for (const auto& e : v.planes[k].entries) occupied[at(e.col, e.row, k)] = 1;

    Partition out;
    int next = 0;
    for (long k = 0; k < static_cast<long>(g.nz); ++k)
        for (long r = 0; r < static_cast<long>(g.ny); ++r)
            for (long c = 0; c < static_cast<long>(g.nx); ++c) {
                if (!occupied[at(c, r, k)] || label[at(c, r, k)] >= 0) continue;
                std::set<Coord> comp;
                std::vector<std::array<long, 3>> queue{{c, r, k}};
                label[at(c, r, k)] = next;
                for (std::size_t q = 0; q < queue.size(); ++q) {
                    const auto [qc, qr, qk] = queue[q];
                    comp.insert({static_cast<std::uint32_t>(qc), static_cast<std::uint32_t>(qr),
                                 static_cast<std::uint32_t>(qk)});
                    for (long dk = -1; dk <= 1; ++dk)
                        for (long dr = -1; dr <= 1; ++dr)
                            for (long dc = -1; dc <= 1; ++dc) {
                                const long nc = qc + dc, nr = qr + dr, nk = qk + dk;
                                if (nc < 0 || nr < 0 || nk < 0 || nc >= static_cast<long>(g.nx) ||
                                    nr >= static_cast<long>(g.ny) || nk >= static_cast<long>(g.nz))
                                    continue;
                                if (!occupied[at(nc, nr, nk)] || label[at(nc, nr, nk)] >= 0) continue;
                                label[at(nc, nr, nk)] = next;
                                queue.push_back({nc, nr, nk});
                            }
                }
                out.insert(comp);
                ++next;
            }
    return out;
}

std::set<Coord> voxel_set(const SparseVolume& v)
{
    std::set<Coord> s;
    for (std::size_t k = 0; k < v.planes.size(); ++k)
        for (const auto& e : v.planes[k].entries) s.insert({e.col, e.row, static_cast<std::uint32_t>(k)});
    return s;
}

double angle_deg(const Vec3& a, const Vec3& b)
{
    const double d = std::abs(a[0] * b[0] + a[1] * b[1] + a[2] * b[2]);
    return std::acos(std::min(1.0, d)) * 180.0 / M_PI;
}

}  // namespace

TEST_CASE("threshold_volume")
{
    const auto g = geom(8, 8, 2);
    const auto v = volume_of(g, {{{0, 0, 0}, 256.0}, {{1, 0, 0}, 0.999}, {{2, 0, 0}, 1.0}, {{3, 3, 1}, -2.0}});

    const auto t = threshold_volume(v, 1.0 / 256.0);
    CHECK(voxel_set(t) == std::set<Coord>{{0, 0, 0}, {2, 0, 0}, {3, 3, 1}});

    // 2/256 drops everything under 2.0; modulus is what counts
    CHECK(voxel_set(threshold_volume(v, 2.0 / 256.0)) == std::set<Coord>{{0, 0, 0}, {3, 3, 1}});
    CHECK(threshold_volume(v, 0.0) == v);
    CHECK(threshold_volume(SparseVolume(g), 0.5).nnz() == 0);
    CHECK_THROWS_AS(threshold_volume(v, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(threshold_volume(v, -0.1), std::invalid_argument);
}

TEST_CASE("connected components")
{
    const auto g = geom(10, 9, 6);

    SUBCASE("examples")
    {
        const auto one = connected_components(volume_of(g, {{{4, 4, 2}, 3.0}}));
        REQUIRE(one.size() == 1);
        CHECK(one[0].volume() == 1);
        CHECK(one[0].centroid == Vec3{4.0, 4.0, 2.0});
        CHECK(one[0].peak == 3.0);

        CHECK(connected_components(volume_of(g, {{{4, 4, 2}, 1.0}, {{5, 5, 3}, 1.0}})).size() == 1);
        CHECK(connected_components(volume_of(g, {{{4, 4, 2}, 1.0}, {{6, 4, 2}, 1.0}})).size() == 2);
        CHECK(connected_components(SparseVolume(g)).empty());
    }

    SUBCASE("matches a flood fill oracle")
    {
        std::mt19937_64 rng(3);
        for (double fill : {0.02, 0.08, 0.2, 0.5}) {
            const auto v = testing::random_volume(g, fill, rng);
            const auto blobs = connected_components(v);
            CHECK(partition_of(blobs) == flood_fill_oracle(v));
            std::size_t total = 0;
            for (const auto& b : blobs) {
                total += b.volume();
                CHECK(std::is_sorted(b.voxels.begin(), b.voxels.end(), [](const Voxel& a, const Voxel& c) {
                    return std::tie(a.plane, a.row, a.col) < std::tie(c.plane, c.row, c.col);
                }));
                // centroid inside the bounding box
                for (int axis = 0; axis < 3; ++axis) {
                    auto coord = [axis](const Voxel& x) {
                        return static_cast<double>(axis == 0 ? x.col : axis == 1 ? x.row : x.plane);
                    };
                    double lo = 1e9, hi = -1e9;
                    for (const auto& x : b.voxels) {
                        lo = std::min(lo, coord(x));
                        hi = std::max(hi, coord(x));
                    }
                    CHECK(b.centroid[axis] >= lo - 1e-12);
                    CHECK(b.centroid[axis] <= hi + 1e-12);
                }
            }
            CHECK(total == v.nnz());
        }
    }

    SUBCASE("partition is invariant under mirroring the volume")
    {
        std::mt19937_64 rng(5);
        const auto v = testing::random_volume(g, 0.15, rng);
        std::vector<std::pair<Coord, double>> mirrored;
        for (std::size_t k = 0; k < g.nz; ++k)
            for (const auto& e : v.planes[k].entries)
                mirrored.push_back({{static_cast<std::uint32_t>(g.nx - 1 - e.col), e.row,
                                     static_cast<std::uint32_t>(g.nz - 1 - k)},
                                    std::abs(e.value)});
        Partition back;
        for (const auto& comp : partition_of(connected_components(volume_of(g, mirrored)))) {
            std::set<Coord> s;
            for (const auto& [c, r, k] : comp)
                s.insert({static_cast<std::uint32_t>(g.nx - 1 - c), r, static_cast<std::uint32_t>(g.nz - 1 - k)});
            back.insert(s);
        }
        CHECK(back == partition_of(connected_components(v)));
    }

    SUBCASE("threshold then components equals components then per-blob threshold")
    {
        std::mt19937_64 rng(8);
        const auto v = testing::random_volume(g, 0.3, rng);
        const double rel = 0.3;
        double peak = 0.0;
        for (const auto& p : v.planes)
            for (const auto& e : p.entries) peak = std::max(peak, std::abs(e.value));

        std::set<Coord> after;
        for (const auto& b : connected_components(v))
            for (const auto& x : b.voxels)
                if (x.intensity >= rel * peak) after.insert({x.col, x.row, x.plane});

        std::set<Coord> before;
        for (const auto& b : connected_components(threshold_volume(v, rel)))
            for (const auto& x : b.voxels) before.insert({x.col, x.row, x.plane});
        CHECK(before == after);
        CHECK(!before.empty());
    }
}

TEST_CASE("filter_min_volume")
{
    auto blob_with = [](std::size_t n) {
        Blob b;
        for (std::uint32_t i = 0; i < n; ++i) b.voxels.push_back({i, 0, 0, 1.0});
        return b;
    };
    const std::vector<Blob> blobs{blob_with(5), blob_with(6), blob_with(1)};
    const auto kept = filter_min_volume(blobs, 5);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].volume() == 6);
    CHECK(filter_min_volume(blobs, 0).size() == 3);
}

TEST_CASE("weighted centroid")
{
    CHECK(weighted_centroid(blob_of({{{0, 0, 0}, 1.0}, {{1, 0, 0}, 3.0}}))[0] == 0.75);

    // symmetric cube of uniform intensity sits at its geometric center
    std::vector<std::pair<Coord, double>> cube;
    for (std::uint32_t k = 2; k < 5; ++k)
        for (std::uint32_t r = 1; r < 4; ++r)
            for (std::uint32_t c = 3; c < 6; ++c) cube.push_back({{c, r, k}, 2.0});
    CHECK(weighted_centroid(blob_of(cube)) == Vec3{4.0, 2.0, 3.0});

    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::uint32_t> pos(0, 50);
    std::uniform_real_distribution<double> w(0.0, 5.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::pair<Coord, double>> vox;
        for (int i = 0; i < 30; ++i) vox.push_back({{pos(rng), pos(rng), pos(rng)}, w(rng)});
        double sw = 0.0;
        Vec3 s{};
        for (const auto& [c, v] : vox) {
            sw += v;
            s[0] += v * std::get<0>(c);
            s[1] += v * std::get<1>(c);
            s[2] += v * std::get<2>(c);
        }
        const auto got = weighted_centroid(blob_of(vox));
        for (int a = 0; a < 3; ++a) CHECK(std::abs(got[a] - s[a] / sw) <= 1e-12);
    }

    CHECK_THROWS_AS(weighted_centroid(blob_of({{{0, 0, 0}, 0.0}, {{1, 0, 0}, 0.0}})), std::domain_error);
    CHECK_THROWS_AS(weighted_centroid(Blob{}), std::domain_error);
}

TEST_CASE("principal axis")
{
    SUBCASE("collinear voxels")
    {
        std::vector<std::pair<Coord, double>> line;
        for (std::uint32_t i = 0; i < 6; ++i) line.push_back({{3 + i, 7 + i, 2}, 1.0 + i});
        const auto a = principal_axis(blob_of(line));
        const double s = 1.0 / std::sqrt(2.0);
        CHECK(std::abs(a.axis[0] - s) <= 1e-10);
        CHECK(std::abs(a.axis[1] - s) <= 1e-10);
        CHECK(std::abs(a.axis[2]) <= 1e-10);
        CHECK(a.reliable);
        CHECK(std::isinf(a.elongation));

        // sign convention: the largest-magnitude component is positive
        std::vector<std::pair<Coord, double>> anti;
        for (std::uint32_t i = 0; i < 6; ++i) anti.push_back({{10 - i, 2 + 2 * i, 1}, 1.0});
        const auto b = principal_axis(blob_of(anti));
        CHECK(b.axis[1] > 0.0);
        CHECK(b.axis[0] < 0.0);
    }

    SUBCASE("physical scaling enters the covariance")
    {
        // one voxel step in x and in z: isotropic in voxel units, along z when planes are 4x farther apart
        const auto b = blob_of({{{0, 0, 0}, 1.0}, {{1, 0, 1}, 1.0}});
        const auto a = principal_axis(b, {1.0, 1.0, 4.0});
        CHECK(angle_deg(a.axis, {1.0 / std::sqrt(17.0), 0.0, 4.0 / std::sqrt(17.0)}) < 1e-8);
    }

    SUBCASE("cube is flagged unreliable")
    {
        std::vector<std::pair<Coord, double>> cube;
        for (std::uint32_t k = 0; k < 3; ++k)
            for (std::uint32_t r = 0; r < 3; ++r)
                for (std::uint32_t c = 0; c < 3; ++c) cube.push_back({{c, r, k}, 1.0});
        CHECK_FALSE(principal_axis(blob_of(cube)).reliable);
    }

    CHECK_THROWS_AS(principal_axis(blob_of({{{0, 0, 0}, 1.0}})), std::domain_error);
    CHECK_THROWS_AS(principal_axis(blob_of({{{0, 0, 0}, 1.0}, {{1, 0, 0}, 0.0}})), std::domain_error);
}

TEST_CASE("segment pipeline")
{
    const auto g = geom(12, 12, 6);
    std::vector<std::pair<Coord, double>> vox;
    for (std::uint32_t i = 0; i < 7; ++i) vox.push_back({{2 + i, 3, 1}, 10.0});  // 7-voxel rod
    for (std::uint32_t i = 0; i < 3; ++i) vox.push_back({{1 + i, 9, 4}, 10.0});  // small blob
    vox.push_back({{10, 10, 5}, 0.01});                                          // below threshold
    SegmentationConfig cfg;
    cfg.axis_scale = Vec3{1.0, 1.0, 1.0};
    const auto blobs = segment(volume_of(g, vox), cfg);
    REQUIRE(blobs.size() == 1);
    CHECK(blobs[0].volume() == 7);
    REQUIRE(blobs[0].orientation.has_value());
    CHECK(angle_deg(blobs[0].orientation->axis, {1.0, 0.0, 0.0}) < 1e-10);

    cfg.axis_scale.reset();
    CHECK_FALSE(segment(volume_of(g, vox), cfg)[0].orientation.has_value());
}

TEST_CASE("rendered rod orientation after reconstruction")
{
    // fine sampling so the stack spans many depths of field; tilted rods are resolvable in z
    const VolumeGeometry g{64, 64, 48, 1e-6, 1e-6, 50e-6, 632e-9};
    const HoloOperator op(g);
    SolverConfig cfg;
    cfg.weights = {1e-3, 1e-3};
    cfg.max_iters = 200;
    SegmentationConfig seg;
    seg.rel_tol = 0.3;
    seg.axis_scale = Vec3{g.pitch, g.pitch, g.dz};

    for (const auto& [elevation, azimuth] : {std::pair{0.0, 30.0}, {30.0, 120.0}, {50.0, 250.0}}) {
        CAPTURE(elevation);
        const double el = elevation * M_PI / 180.0, az = azimuth * M_PI / 180.0;
        const Vec3 axis{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
        Scene s;
        s.geom = g;
        SceneParticle p;
        p.position = {32.3 * g.pitch, 31.6 * g.pitch, g.plane_depth(24)};
        p.diameter = 2e-6;
        p.opacity = 0.2;
        p.rod = RodShape{axis, 30e-6};
        s.particles.push_back(p);

        auto b = render_hologram(s);
        for (auto& v : b.data) v -= 1.0;
        const auto blobs = segment(fista(op, b, cfg).volume, seg);
        REQUIRE(!blobs.empty());
        const auto largest = std::max_element(blobs.begin(), blobs.end(),
                                              [](const Blob& x, const Blob& y) { return x.volume() < y.volume(); });
        REQUIRE(largest->orientation.has_value());
        const double err = angle_deg(largest->orientation->axis, axis);
        MESSAGE("rod at elevation " << elevation << " deg: axis error " << err << " deg");
        CHECK(err <= 5.0);
    }
}
