#pragma once

#include "rihvr/fft.hpp"
#include "rihvr/grid.hpp"
#include "rihvr/sparse_volume.hpp"

#include <cstdint>
#include <vector>

namespace rihvr {

/// Whether the on-axis phase exp(i 2 pi z / lambda) is kept in the transfer function.
/// Intensity holograms are recorded against a reference wave that accumulates the same
/// phase, so the hologram operator drops it by default.
enum class Carrier { keep, remove };

/// Angular-spectrum transfer function; zero for evanescent frequencies.
Complex transfer_function(double fx, double fy, double z, double wavelength, Carrier carrier = Carrier::keep);

/// Angular-spectrum propagation over distance z with periodic boundaries.
ComplexField2D propagate(const ComplexField2D& field, double z, Carrier carrier = Carrier::keep);

struct OperatorOptions {
    Carrier carrier = Carrier::remove;
    /// 1 = periodic planes, 2 = each plane zero-padded to twice its extent.
    int padding = 1;
    /// Planes summed per forward accumulation block. Fixed so results do not depend on thread count.
    std::size_t block_planes = 8;
};

/// Linear hologram operator H mapping a volume to a real sensor-plane field,
/// Hx = Re sum_k P(-z_k) x_k, and its adjoint (H* r)_k = P(+z_k) r.
///
/// Transfer functions for every plane are precomputed at construction.
class HoloOperator {
public:
    explicit HoloOperator(const VolumeGeometry& geom, OperatorOptions opts = {});

    const VolumeGeometry& geometry() const { return geom_; }
    const OperatorOptions& options() const { return opts_; }

    RPlane forward(const SparseVolume& x) const;
    RPlane forward(const DenseStack& x) const;
    DenseStack adjoint(const RPlane& r) const;

    /// 2 H*(Hx - b).
    DenseStack data_gradient(const SparseVolume& x, const RPlane& b) const;

    /// Spectrum of the (padded) sensor field, input to adjoint_plane.
    CPlane sensor_spectrum(const RPlane& r) const;
    /// (H* r)_k given sensor_spectrum(r); `out` is resized to ny x nx.
    void adjoint_plane(const CPlane& spectrum, std::size_t k, CPlane& out) const;

    /// Power-iteration estimate of the largest eigenvalue of H*H.
    double norm_squared_estimate(int iterations = 10, std::uint64_t seed = 1) const;

private:
    std::size_t padded_rows() const { return geom_.ny * static_cast<std::size_t>(opts_.padding); }
    std::size_t padded_cols() const { return geom_.nx * static_cast<std::size_t>(opts_.padding); }
    std::size_t row_offset() const { return (padded_rows() - geom_.ny) / 2; }
    std::size_t col_offset() const { return (padded_cols() - geom_.nx) / 2; }

    template <class PlaneSource>
    RPlane forward_impl(const PlaneSource& source) const;

    VolumeGeometry geom_;
    OperatorOptions opts_;
    Fft2D fft_;
    std::vector<CPlane> kernels_;  // T(+z_k) on the padded grid
};

/// Convenience wrappers constructing a default operator.
RPlane forward(const SparseVolume& x, const VolumeGeometry& geom);
DenseStack adjoint(const RPlane& r, const VolumeGeometry& geom);
DenseStack data_gradient(const SparseVolume& x, const RPlane& b, const VolumeGeometry& geom);

/// Single-threaded reference built directly from propagate(); kept for cross-checking
/// the OpenMP operator and as the benchmark baseline.
namespace serial {
RPlane forward(const SparseVolume& x, const VolumeGeometry& geom, OperatorOptions opts = {});
DenseStack adjoint(const RPlane& r, const VolumeGeometry& geom, OperatorOptions opts = {});
}  // namespace serial

}  // namespace rihvr
