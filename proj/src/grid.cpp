#include "rihvr/grid.hpp"

#include <cmath>

namespace rihvr {

void ComplexField2D::validate() const
{
    if (values.rows < 1 || values.cols < 1)
        throw std::invalid_argument("field must be at least 1x1");
    if (values.data.size() != values.rows * values.cols)
        throw std::invalid_argument("field storage does not match its extents");
    if (!(pitch > 0.0) || !(wavelength > 0.0))
        throw std::invalid_argument("field pitch and wavelength must be positive");
    for (const auto& v : values.data)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::invalid_argument("field values must be finite");
}

void VolumeGeometry::validate() const
{
    if (nx < 1 || ny < 1 || nz < 1)
        throw std::invalid_argument("volume extents must be >= 1");
    if (!(pitch > 0.0)) throw std::invalid_argument("pitch must be positive");
    if (!(dz > 0.0)) throw std::invalid_argument("dz must be positive");
    if (!(z0 >= 0.0)) throw std::invalid_argument("z0 must be non-negative");
    if (!(wavelength > 0.0)) throw std::invalid_argument("wavelength must be positive");
}

void VolumeGeometry::require_lateral(std::size_t rows, std::size_t cols, const char* what) const
{
    if (rows != ny || cols != nx) {
        throw GeometryError(std::string(what) + ": expected " + std::to_string(ny) + "x" +
                            std::to_string(nx) + ", got " + std::to_string(rows) + "x" +
                            std::to_string(cols));
    }
}

}  // namespace rihvr
