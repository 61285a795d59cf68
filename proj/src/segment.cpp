#include "rihvr/segment.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace rihvr {

SparseVolume threshold_volume(const SparseVolume& v, double rel_tol)
{
    if (!(rel_tol >= 0.0 && rel_tol < 1.0)) throw std::invalid_argument("rel_tol must be in [0, 1)");
    double peak = 0.0;
    for (const auto& p : v.planes)
        for (const auto& e : p.entries) peak = std::max(peak, std::abs(e.value));
    if (peak == 0.0 || rel_tol == 0.0) return v;
    const double cut = rel_tol * peak;
    SparseVolume out = v;
    for (auto& p : out.planes) {
        std::erase_if(p.entries, [cut](const SparseEntry& e) { return std::abs(e.value) < cut; });
    }
    return out;
}

namespace {

struct DisjointSet {
    std::vector<std::size_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t a)
    {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent[b] = a;  // root is always the smallest index
    }
};

}  // namespace

std::vector<Blob> connected_components(const SparseVolume& v)
{
    const auto& g = v.geom;
    std::vector<Voxel> voxels;
    voxels.reserve(v.nnz());
    for (std::size_t k = 0; k < v.planes.size(); ++k)
        for (const auto& e : v.planes[k].entries)
            voxels.push_back({e.col, e.row, static_cast<std::uint32_t>(k), std::abs(e.value)});

    auto key = [&](long col, long row, long plane) {
        return (static_cast<std::uint64_t>(plane) * g.ny + static_cast<std::uint64_t>(row)) * g.nx +
               static_cast<std::uint64_t>(col);
    };
    std::unordered_map<std::uint64_t, std::size_t> index;
    index.reserve(voxels.size() * 2);
    for (std::size_t i = 0; i < voxels.size(); ++i) index.emplace(key(voxels[i].col, voxels[i].row, voxels[i].plane), i);

    DisjointSet sets(voxels.size());
    for (std::size_t i = 0; i < voxels.size(); ++i) {
        const long c = voxels[i].col, r = voxels[i].row, k = voxels[i].plane;
        for (long dk = -1; dk <= 1; ++dk) {
            for (long dr = -1; dr <= 1; ++dr) {
                for (long dc = -1; dc <= 1; ++dc) {
                    if (dk == 0 && dr == 0 && dc == 0) continue;
                    const long nc = c + dc, nr = r + dr, nk = k + dk;
                    if (nc < 0 || nr < 0 || nk < 0 || nc >= static_cast<long>(g.nx) || nr >= static_cast<long>(g.ny) ||
                        nk >= static_cast<long>(g.nz))
                        continue;
                    if (auto it = index.find(key(nc, nr, nk)); it != index.end()) sets.unite(i, it->second);
                }
            }
        }
    }

    std::vector<Blob> blobs;
    std::unordered_map<std::size_t, std::size_t> blob_of_root;
    for (std::size_t i = 0; i < voxels.size(); ++i) {
        const std::size_t root = sets.find(i);
        auto [it, inserted] = blob_of_root.emplace(root, blobs.size());
        if (inserted) blobs.emplace_back();
        blobs[it->second].voxels.push_back(voxels[i]);
    }
    for (auto& b : blobs) {
        b.centroid = weighted_centroid(b);
        for (const auto& vx : b.voxels) b.peak = std::max(b.peak, vx.intensity);
    }
    return blobs;
}

std::vector<Blob> filter_min_volume(std::vector<Blob> blobs, std::size_t min_vox)
{
    std::erase_if(blobs, [min_vox](const Blob& b) { return b.volume() <= min_vox; });
    return blobs;
}

Vec3 weighted_centroid(const Blob& blob)
{
    if (blob.voxels.empty()) throw std::domain_error("weighted_centroid: empty blob");
    double w = 0.0, sx = 0.0, sy = 0.0, sz = 0.0;
    for (const auto& v : blob.voxels) {
        if (v.intensity < 0.0) throw std::domain_error("weighted_centroid: negative intensity");
        w += v.intensity;
        sx += v.intensity * v.col;
        sy += v.intensity * v.row;
        sz += v.intensity * v.plane;
    }
    if (w == 0.0) throw std::domain_error("weighted_centroid: degenerate blob (all intensities zero)");
    return {sx / w, sy / w, sz / w};
}

AxisEstimate principal_axis(const Blob& blob, const Vec3& scale)
{
    std::size_t positive = 0;
    for (const auto& v : blob.voxels) positive += v.intensity > 0.0 ? 1 : 0;
    if (positive < 2) throw std::domain_error("principal_axis: need two voxels with positive intensity");

    double w = 0.0;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& v : blob.voxels) {
        const Eigen::Vector3d p(v.col * scale[0], v.row * scale[1], v.plane * scale[2]);
        mean += v.intensity * p;
        w += v.intensity;
    }
    mean /= w;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& v : blob.voxels) {
        const Eigen::Vector3d d = Eigen::Vector3d(v.col * scale[0], v.row * scale[1], v.plane * scale[2]) - mean;
        cov += v.intensity * d * d.transpose();
    }
    cov /= w;

    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const auto& ev = eig.eigenvalues();  // ascending
    const double l1 = ev(2);
    const double l2 = std::max(ev(1), 0.0);
    Eigen::Vector3d axis = eig.eigenvectors().col(2).normalized();

    int big = 0;
    for (int a = 1; a < 3; ++a)
        if (std::abs(axis(a)) > std::abs(axis(big))) big = a;
    if (axis(big) < 0.0) axis = -axis;

    AxisEstimate out;
    out.axis = {axis(0), axis(1), axis(2)};
    out.elongation = l2 > 0.0 ? std::sqrt(l1 / l2) : std::numeric_limits<double>::infinity();
    out.reliable = (l1 - l2) > 1e-9 * std::max(l1, std::numeric_limits<double>::min());
    return out;
}

std::vector<Blob> segment(const SparseVolume& v, const SegmentationConfig& cfg)
{
    auto blobs = filter_min_volume(connected_components(threshold_volume(v, cfg.rel_tol)), cfg.min_vox);
    if (cfg.axis_scale) {
        for (auto& b : blobs) {
            std::size_t positive = 0;
            for (const auto& vx : b.voxels) positive += vx.intensity > 0.0 ? 1 : 0;
            if (positive >= 2) b.orientation = principal_axis(b, *cfg.axis_scale);
        }
    }
    return blobs;
}

}  // namespace rihvr
