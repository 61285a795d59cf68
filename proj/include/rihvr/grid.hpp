#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rihvr {

using Complex = std::complex<double>;

/// Thrown when two objects that must share a sampling grid do not.
class GeometryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense row-major 2D array. Row index is y, column index is x.
template <class T>
struct Plane {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Plane() = default;
    Plane(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

    T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::size_t size() const { return data.size(); }
    std::span<T> span() { return data; }
    std::span<const T> span() const { return data; }

    bool same_shape(const Plane& other) const { return rows == other.rows && cols == other.cols; }
    bool operator==(const Plane&) const = default;
};

using CPlane = Plane<Complex>;
using RPlane = Plane<double>;

/// Sampled complex wavefield with its physical sampling.
struct ComplexField2D {
    CPlane values;
    double pitch = 0.0;       // m / pixel
    double wavelength = 0.0;  // m

    std::size_t width() const { return values.cols; }
    std::size_t height() const { return values.rows; }

    void validate() const;
};

/// Reconstruction volume sampling. Plane k sits at depth z0 + k*dz from the sensor.
struct VolumeGeometry {
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::size_t nz = 0;
    double pitch = 0.0;
    double dz = 0.0;
    double z0 = 0.0;
    double wavelength = 0.0;

    double plane_depth(std::size_t k) const { return z0 + static_cast<double>(k) * dz; }
    std::size_t plane_size() const { return nx * ny; }
    std::size_t voxel_count() const { return nx * ny * nz; }

    void validate() const;
    void require_lateral(std::size_t rows, std::size_t cols, const char* what) const;

    bool operator==(const VolumeGeometry&) const = default;
};

/// Dense stack of planes, index k is depth order.
using DenseStack = std::vector<CPlane>;

}  // namespace rihvr
