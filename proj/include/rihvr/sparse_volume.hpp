#pragma once

#include "rihvr/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace rihvr {

struct SparseEntry {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    Complex value;

    bool operator==(const SparseEntry&) const = default;
};

/// Coordinate-format plane. Entries are sorted by (row, col), unique, and never zero.
struct SparsePlane {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<SparseEntry> entries;

    SparsePlane() = default;
    SparsePlane(std::size_t r, std::size_t c) : rows(r), cols(c) {}

    std::size_t nnz() const { return entries.size(); }
    bool empty() const { return entries.empty(); }

    /// Throws std::invalid_argument if ordering, range or zero-free invariants are broken.
    void check_invariants() const;

    bool operator==(const SparsePlane&) const = default;
};

/// Z-ordered stack of sparse planes sharing one geometry.
struct SparseVolume {
    VolumeGeometry geom;
    std::vector<SparsePlane> planes;

    SparseVolume() = default;
    /// All-zero volume.
    explicit SparseVolume(const VolumeGeometry& g);

    std::size_t nnz() const;
    void check_invariants() const;

    bool operator==(const SparseVolume&) const = default;
};

/// Keeps entries with |value| > drop_tol.
SparsePlane from_dense(const CPlane& plane, double drop_tol = 0.0);
CPlane to_dense(const SparsePlane& plane);

/// Adds the plane into `out` (same shape) without clearing it.
void scatter_add(const SparsePlane& plane, Complex scale, CPlane& out);

/// Bytes under the 24-bytes-per-nonzero accounting (two 8-byte indices + 8-byte complex value).
std::size_t memory_estimate(const SparseVolume& v);
/// Bytes for a dense volume of the same geometry at 8 bytes per voxel.
std::size_t dense_memory_estimate(const VolumeGeometry& g);

/// Fraction of zero voxels, 1 - nnz / (nx*ny*nz).
double sparsity(const SparseVolume& v);

/// a*x + b*y with an exact merge of the entry sets; exact zeros are dropped.
SparsePlane lincomb(double a, const SparsePlane& x, double b, const SparsePlane& y);
SparseVolume lincomb(double a, const SparseVolume& x, double b, const SparseVolume& y);

/// alpha*x + y.
SparseVolume axpy(double alpha, const SparseVolume& x, const SparseVolume& y);

/// Real inner product Re sum conj(a) * b.
double real_inner(const SparsePlane& a, const SparsePlane& b);

/// Sum of |x|^2 over stored entries.
double squared_norm(const SparsePlane& p);

// Binary container: "RIHV", u64 version, u64 nx, ny, nz, f64 pitch, dz, z0, wavelength,
// then per plane a u64 entry count followed by (u32 row, u32 col, f32 re, f32 im) records.
// All fields little-endian.
inline constexpr std::uint64_t kVolumeFormatVersion = 1;

void write_volume(std::ostream& os, const SparseVolume& v);
SparseVolume read_volume(std::istream& is);
void write_volume(const std::filesystem::path& path, const SparseVolume& v);
SparseVolume read_volume(const std::filesystem::path& path);

}  // namespace rihvr
