#include "rihvr/optics.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace rihvr {

Complex transfer_function(double fx, double fy, double z, double wavelength, Carrier carrier)
{
    const double a = (wavelength * fx) * (wavelength * fx) + (wavelength * fy) * (wavelength * fy);
    if (a > 1.0) return {0.0, 0.0};
    const double root = std::sqrt(1.0 - a);
    const double k = 2.0 * std::numbers::pi * z / wavelength;
    // sqrt(1-a) - 1 written as -a / (1 + sqrt(1-a)) to keep precision for paraxial frequencies
    const double phase = carrier == Carrier::keep ? k * root : -k * a / (1.0 + root);
    return std::polar(1.0, phase);
}

namespace {

CPlane kernel_plane(std::size_t rows, std::size_t cols, double pitch, double wavelength, double z, Carrier carrier)
{
    CPlane out(rows, cols);
    const double dfx = 1.0 / (static_cast<double>(cols) * pitch);
    const double dfy = 1.0 / (static_cast<double>(rows) * pitch);
    for (std::size_t i = 0; i < rows; ++i) {
        const double fy = static_cast<double>(frequency_index(i, rows)) * dfy;
        for (std::size_t j = 0; j < cols; ++j) {
            const double fx = static_cast<double>(frequency_index(j, cols)) * dfx;
            out(i, j) = transfer_function(fx, fy, z, wavelength, carrier);
        }
    }
    return out;
}

void embed(const CPlane& src, CPlane& dst, std::size_t r0, std::size_t c0)
{
    std::fill(dst.data.begin(), dst.data.end(), Complex{});
    for (std::size_t r = 0; r < src.rows; ++r)
        for (std::size_t c = 0; c < src.cols; ++c) dst(r + r0, c + c0) = src(r, c);
}

}  // namespace

ComplexField2D propagate(const ComplexField2D& field, double z, Carrier carrier)
{
    field.validate();
    ComplexField2D out = field;
    if (z == 0.0) return out;
    Fft2D fft(field.height(), field.width());
    fft.forward(out.values.span());
    const CPlane kernel = kernel_plane(field.height(), field.width(), field.pitch, field.wavelength, z, carrier);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values.data[i] *= kernel.data[i];
    fft.inverse(out.values.span());
    return out;
}

// --- HoloOperator ------------------------------------------------------------

HoloOperator::HoloOperator(const VolumeGeometry& geom, OperatorOptions opts)
    : geom_(geom), opts_(opts), fft_((geom.validate(), geom.ny * static_cast<std::size_t>(std::max(1, opts.padding))),
                                     geom.nx * static_cast<std::size_t>(std::max(1, opts.padding)))
{
    if (opts_.padding != 1 && opts_.padding != 2) throw std::invalid_argument("padding must be 1 or 2");
    if (opts_.block_planes < 1) throw std::invalid_argument("block_planes must be >= 1");
    kernels_.resize(geom_.nz);
    const auto nz = static_cast<long>(geom_.nz);
#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < nz; ++k) {
        kernels_[k] = kernel_plane(padded_rows(), padded_cols(), geom_.pitch, geom_.wavelength,
                                   geom_.plane_depth(static_cast<std::size_t>(k)), opts_.carrier);
    }
}

template <class PlaneSource>
RPlane HoloOperator::forward_impl(const PlaneSource& source) const
{
    const std::size_t prow = padded_rows();
    const std::size_t pcol = padded_cols();
    const std::size_t np = prow * pcol;
    const std::size_t block = opts_.block_planes;
    const std::size_t nblocks = (geom_.nz + block - 1) / block;
    std::vector<CPlane> partial(nblocks);

#pragma omp parallel
    {
        CPlane buf(prow, pcol);
#pragma omp for schedule(dynamic)
        for (long b = 0; b < static_cast<long>(nblocks); ++b) {
            const std::size_t k_begin = static_cast<std::size_t>(b) * block;
            const std::size_t k_end = std::min(geom_.nz, k_begin + block);
            for (std::size_t k = k_begin; k < k_end; ++k) {
                if (!source(k, buf)) continue;
                fft_.forward(buf.span());
                if (partial[b].size() == 0) partial[b] = CPlane(prow, pcol);
                Complex* acc = partial[b].data.data();
                const Complex* ker = kernels_[k].data.data();
                const Complex* v = buf.data.data();
                for (std::size_t i = 0; i < np; ++i) acc[i] += std::conj(ker[i]) * v[i];
            }
        }
    }

    // fixed-order reduction over blocks
    CPlane total(prow, pcol);
    for (const auto& p : partial) {
        if (p.size() == 0) continue;
        for (std::size_t i = 0; i < np; ++i) total.data[i] += p.data[i];
    }
    fft_.inverse(total.span());

    RPlane out(geom_.ny, geom_.nx);
    const std::size_t r0 = row_offset();
    const std::size_t c0 = col_offset();
    for (std::size_t r = 0; r < geom_.ny; ++r)
        for (std::size_t c = 0; c < geom_.nx; ++c) out(r, c) = total(r + r0, c + c0).real();
    return out;
}

RPlane HoloOperator::forward(const SparseVolume& x) const
{
    if (!(x.geom == geom_)) throw GeometryError("forward: volume geometry does not match operator");
    if (x.planes.size() != geom_.nz) throw GeometryError("forward: plane count mismatch");
    const std::size_t r0 = row_offset();
    const std::size_t c0 = col_offset();
    return forward_impl([&](std::size_t k, CPlane& buf) {
        const auto& plane = x.planes[k];
        if (plane.empty()) return false;
        std::fill(buf.data.begin(), buf.data.end(), Complex{});
        for (const auto& e : plane.entries) buf(e.row + r0, e.col + c0) = e.value;
        return true;
    });
}

RPlane HoloOperator::forward(const DenseStack& x) const
{
    if (x.size() != geom_.nz) throw GeometryError("forward: plane count mismatch");
    for (const auto& p : x) geom_.require_lateral(p.rows, p.cols, "forward");
    const std::size_t r0 = row_offset();
    const std::size_t c0 = col_offset();
    return forward_impl([&](std::size_t k, CPlane& buf) {
        embed(x[k], buf, r0, c0);
        return true;
    });
}

CPlane HoloOperator::sensor_spectrum(const RPlane& r) const
{
    geom_.require_lateral(r.rows, r.cols, "adjoint");
    CPlane spec(padded_rows(), padded_cols());
    const std::size_t r0 = row_offset();
    const std::size_t c0 = col_offset();
    for (std::size_t i = 0; i < r.rows; ++i)
        for (std::size_t j = 0; j < r.cols; ++j) spec(i + r0, j + c0) = r(i, j);
    fft_.forward(spec.span());
    return spec;
}

void HoloOperator::adjoint_plane(const CPlane& spectrum, std::size_t k, CPlane& out) const
{
    const std::size_t np = spectrum.size();
    const Complex* ker = kernels_.at(k).data.data();
    if (opts_.padding == 1) {
        if (!out.same_shape(spectrum)) out = CPlane(spectrum.rows, spectrum.cols);
        for (std::size_t i = 0; i < np; ++i) out.data[i] = spectrum.data[i] * ker[i];
        fft_.inverse(out.span());
        return;
    }
    CPlane buf(spectrum.rows, spectrum.cols);
    for (std::size_t i = 0; i < np; ++i) buf.data[i] = spectrum.data[i] * ker[i];
    fft_.inverse(buf.span());
    if (out.rows != geom_.ny || out.cols != geom_.nx) out = CPlane(geom_.ny, geom_.nx);
    const std::size_t r0 = row_offset();
    const std::size_t c0 = col_offset();
    for (std::size_t i = 0; i < geom_.ny; ++i)
        for (std::size_t j = 0; j < geom_.nx; ++j) out(i, j) = buf(i + r0, j + c0);
}

DenseStack HoloOperator::adjoint(const RPlane& r) const
{
    const CPlane spec = sensor_spectrum(r);
    DenseStack out(geom_.nz);
    const auto nz = static_cast<long>(geom_.nz);
#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < nz; ++k) adjoint_plane(spec, static_cast<std::size_t>(k), out[k]);
    return out;
}

DenseStack HoloOperator::data_gradient(const SparseVolume& x, const RPlane& b) const
{
    geom_.require_lateral(b.rows, b.cols, "data_gradient");
    RPlane resid = forward(x);
    for (std::size_t i = 0; i < resid.size(); ++i) resid.data[i] = 2.0 * (resid.data[i] - b.data[i]);
    return adjoint(resid);
}

double HoloOperator::norm_squared_estimate(int iterations, std::uint64_t seed) const
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    DenseStack v(geom_.nz, CPlane(geom_.ny, geom_.nx));
    auto normalize = [](DenseStack& s) {
        double n2 = 0.0;
        for (const auto& p : s)
            for (const auto& c : p.data) n2 += std::norm(c);
        const double n = std::sqrt(n2);
        if (n > 0.0)
            for (auto& p : s)
                for (auto& c : p.data) c /= n;
        return n;
    };
    for (auto& p : v)
        for (auto& c : p.data) c = Complex(normal(rng), normal(rng));
    normalize(v);
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        v = adjoint(forward(v));
        estimate = normalize(v);
        if (estimate == 0.0) break;
    }
    return estimate;
}

RPlane forward(const SparseVolume& x, const VolumeGeometry& geom) { return HoloOperator(geom).forward(x); }

DenseStack adjoint(const RPlane& r, const VolumeGeometry& geom) { return HoloOperator(geom).adjoint(r); }

DenseStack data_gradient(const SparseVolume& x, const RPlane& b, const VolumeGeometry& geom)
{
    return HoloOperator(geom).data_gradient(x, b);
}

// --- serial reference ----------------------------------------------------------

namespace serial {

namespace {

struct Padding {
    std::size_t rows, cols, r0, c0;
};

Padding padding_for(const VolumeGeometry& g, const OperatorOptions& opts)
{
    const auto f = static_cast<std::size_t>(opts.padding);
    return {g.ny * f, g.nx * f, (g.ny * f - g.ny) / 2, (g.nx * f - g.nx) / 2};
}

}  // namespace

RPlane forward(const SparseVolume& x, const VolumeGeometry& geom, OperatorOptions opts)
{
    geom.validate();
    if (!(x.geom == geom) || x.planes.size() != geom.nz) throw GeometryError("serial::forward: geometry mismatch");
    const Padding pad = padding_for(geom, opts);
    RPlane acc(pad.rows, pad.cols);
    for (std::size_t k = 0; k < geom.nz; ++k) {
        if (x.planes[k].empty()) continue;
        ComplexField2D field{CPlane(pad.rows, pad.cols), geom.pitch, geom.wavelength};
        for (const auto& e : x.planes[k].entries) field.values(e.row + pad.r0, e.col + pad.c0) = e.value;
        const auto out = propagate(field, -geom.plane_depth(k), opts.carrier);
        for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += out.values.data[i].real();
    }
    RPlane cropped(geom.ny, geom.nx);
    for (std::size_t r = 0; r < geom.ny; ++r)
        for (std::size_t c = 0; c < geom.nx; ++c) cropped(r, c) = acc(r + pad.r0, c + pad.c0);
    return cropped;
}

DenseStack adjoint(const RPlane& r, const VolumeGeometry& geom, OperatorOptions opts)
{
    geom.validate();
    geom.require_lateral(r.rows, r.cols, "serial::adjoint");
    const Padding pad = padding_for(geom, opts);
    ComplexField2D field{CPlane(pad.rows, pad.cols), geom.pitch, geom.wavelength};
    for (std::size_t i = 0; i < r.rows; ++i)
        for (std::size_t j = 0; j < r.cols; ++j) field.values(i + pad.r0, j + pad.c0) = r(i, j);
    DenseStack out;
    out.reserve(geom.nz);
    for (std::size_t k = 0; k < geom.nz; ++k) {
        const auto p = propagate(field, geom.plane_depth(k), opts.carrier);
        CPlane plane(geom.ny, geom.nx);
        for (std::size_t i = 0; i < geom.ny; ++i)
            for (std::size_t j = 0; j < geom.nx; ++j) plane(i, j) = p.values(i + pad.r0, j + pad.c0);
        out.push_back(std::move(plane));
    }
    return out;
}

}  // namespace serial

}  // namespace rihvr
