#include "rihvr/sparse_volume.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace rihvr {

namespace {

bool entry_less(const SparseEntry& a, const SparseEntry& b)
{
    return a.row != b.row ? a.row < b.row : a.col < b.col;
}

void require_same_shape(const SparsePlane& a, const SparsePlane& b)
{
    if (a.rows != b.rows || a.cols != b.cols) throw GeometryError("sparse planes differ in shape");
}

}  // namespace

void SparsePlane::check_invariants() const
{
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (e.row >= rows || e.col >= cols) throw std::invalid_argument("sparse entry out of range");
        if (e.value == Complex{}) throw std::invalid_argument("sparse plane stores a zero");
        if (i > 0 && !entry_less(entries[i - 1], e))
            throw std::invalid_argument("sparse entries unsorted or duplicated");
    }
}

SparseVolume::SparseVolume(const VolumeGeometry& g) : geom(g), planes(g.nz, SparsePlane(g.ny, g.nx)) {}

std::size_t SparseVolume::nnz() const
{
    std::size_t n = 0;
    for (const auto& p : planes) n += p.nnz();
    return n;
}

void SparseVolume::check_invariants() const
{
    if (planes.size() != geom.nz) throw GeometryError("plane count does not match geometry");
    for (const auto& p : planes) {
        if (p.rows != geom.ny || p.cols != geom.nx) throw GeometryError("plane extents do not match geometry");
        p.check_invariants();
    }
}

SparsePlane from_dense(const CPlane& plane, double drop_tol)
{
    if (drop_tol < 0.0) throw std::invalid_argument("drop_tol must be >= 0");
    SparsePlane out(plane.rows, plane.cols);
    for (std::size_t r = 0; r < plane.rows; ++r) {
        const Complex* row = plane.data.data() + r * plane.cols;
        for (std::size_t c = 0; c < plane.cols; ++c) {
            const Complex v = row[c];
            if (v == Complex{}) continue;
            if (drop_tol > 0.0 && std::abs(v) <= drop_tol) continue;
            out.entries.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c), v});
        }
    }
    return out;
}

CPlane to_dense(const SparsePlane& plane)
{
    CPlane out(plane.rows, plane.cols);
    for (const auto& e : plane.entries) out(e.row, e.col) = e.value;
    return out;
}

void scatter_add(const SparsePlane& plane, Complex scale, CPlane& out)
{
    if (out.rows != plane.rows || out.cols != plane.cols) throw GeometryError("scatter_add: shape mismatch");
    for (const auto& e : plane.entries) out(e.row, e.col) += scale * e.value;
}

std::size_t memory_estimate(const SparseVolume& v) { return v.nnz() * 24; }

std::size_t dense_memory_estimate(const VolumeGeometry& g) { return g.voxel_count() * 8; }

double sparsity(const SparseVolume& v)
{
    const auto total = v.geom.voxel_count();
    if (total == 0) return 1.0;
    return 1.0 - static_cast<double>(v.nnz()) / static_cast<double>(total);
}

SparsePlane lincomb(double a, const SparsePlane& x, double b, const SparsePlane& y)
{
    require_same_shape(x, y);
    SparsePlane out(x.rows, x.cols);
    out.entries.reserve(std::max(x.nnz(), y.nnz()));
    auto push = [&](std::uint32_t r, std::uint32_t c, Complex v) {
        if (v != Complex{}) out.entries.push_back({r, c, v});
    };
    auto xi = x.entries.begin();
    auto yi = y.entries.begin();
    while (xi != x.entries.end() || yi != y.entries.end()) {
        if (yi == y.entries.end() || (xi != x.entries.end() && entry_less(*xi, *yi))) {
            push(xi->row, xi->col, a * xi->value);
            ++xi;
        } else if (xi == x.entries.end() || entry_less(*yi, *xi)) {
            push(yi->row, yi->col, b * yi->value);
            ++yi;
        } else {
            push(xi->row, xi->col, a * xi->value + b * yi->value);
            ++xi;
            ++yi;
        }
    }
    return out;
}

SparseVolume lincomb(double a, const SparseVolume& x, double b, const SparseVolume& y)
{
    if (!(x.geom == y.geom)) throw GeometryError("lincomb: geometry mismatch");
    SparseVolume out;
    out.geom = x.geom;
    out.planes.resize(x.planes.size());
    const auto n = static_cast<long>(x.planes.size());
#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < n; ++k) out.planes[k] = lincomb(a, x.planes[k], b, y.planes[k]);
    return out;
}

SparseVolume axpy(double alpha, const SparseVolume& x, const SparseVolume& y)
{
    return lincomb(alpha, x, 1.0, y);
}

double real_inner(const SparsePlane& a, const SparsePlane& b)
{
    require_same_shape(a, b);
    double acc = 0.0;
    auto ai = a.entries.begin();
    auto bi = b.entries.begin();
    while (ai != a.entries.end() && bi != b.entries.end()) {
        if (entry_less(*ai, *bi)) {
            ++ai;
        } else if (entry_less(*bi, *ai)) {
            ++bi;
        } else {
            acc += ai->value.real() * bi->value.real() + ai->value.imag() * bi->value.imag();
            ++ai;
            ++bi;
        }
    }
    return acc;
}

double squared_norm(const SparsePlane& p)
{
    double acc = 0.0;
    for (const auto& e : p.entries) acc += std::norm(e.value);
    return acc;
}

// --- binary container -------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put(std::ostream& os, T value)
{
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    os.write(bytes.data(), bytes.size());
}

template <class T>
T get(std::istream& is)
{
    std::array<char, sizeof(T)> bytes;
    if (!is.read(bytes.data(), bytes.size())) throw std::runtime_error("volume file truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

}  // namespace

void write_volume(std::ostream& os, const SparseVolume& v)
{
    v.check_invariants();
    os.write("RIHV", 4);
    put<std::uint64_t>(os, kVolumeFormatVersion);
    put<std::uint64_t>(os, v.geom.nx);
    put<std::uint64_t>(os, v.geom.ny);
    put<std::uint64_t>(os, v.geom.nz);
    put<double>(os, v.geom.pitch);
    put<double>(os, v.geom.dz);
    put<double>(os, v.geom.z0);
    put<double>(os, v.geom.wavelength);
    for (const auto& p : v.planes) {
        put<std::uint64_t>(os, p.nnz());
        for (const auto& e : p.entries) {
            put<std::uint32_t>(os, e.row);
            put<std::uint32_t>(os, e.col);
            put<float>(os, static_cast<float>(e.value.real()));
            put<float>(os, static_cast<float>(e.value.imag()));
        }
    }
    if (!os) throw std::runtime_error("failed writing volume");
}

SparseVolume read_volume(std::istream& is)
{
    char magic[4];
    if (!is.read(magic, 4) || std::string(magic, 4) != "RIHV") throw std::runtime_error("not a RIHV volume file");
    const auto version = get<std::uint64_t>(is);
    if (version != kVolumeFormatVersion)
        throw std::runtime_error("unsupported volume format version " + std::to_string(version));
    VolumeGeometry g;
    g.nx = get<std::uint64_t>(is);
    g.ny = get<std::uint64_t>(is);
    g.nz = get<std::uint64_t>(is);
    g.pitch = get<double>(is);
    g.dz = get<double>(is);
    g.z0 = get<double>(is);
    g.wavelength = get<double>(is);
    try {
        g.validate();
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("corrupt volume header: ") + e.what());
    }
    SparseVolume v(g);
    for (auto& p : v.planes) {
        const auto count = get<std::uint64_t>(is);
        if (count > g.plane_size()) throw std::runtime_error("corrupt volume: plane entry count exceeds plane size");
        p.entries.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            SparseEntry e;
            e.row = get<std::uint32_t>(is);
            e.col = get<std::uint32_t>(is);
            const float re = get<float>(is);
            const float im = get<float>(is);
            e.value = Complex(re, im);
            if (e.value == Complex{}) continue;  // value underflowed to zero in f32
            p.entries.push_back(e);
        }
        try {
            p.check_invariants();
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(std::string("corrupt volume: ") + e.what());
        }
    }
    return v;
}

void write_volume(const std::filesystem::path& path, const SparseVolume& v)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_volume(os, v);
}

SparseVolume read_volume(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_volume(is);
}

}  // namespace rihvr
