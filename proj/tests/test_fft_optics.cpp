#include "rihvr/fft.hpp"
#include "rihvr/optics.hpp"
#include "support.hpp"

#include <doctest.h>

#include <omp.h>

using namespace rihvr;
using testing::rel_diff;

namespace {

VolumeGeometry small_geom(std::size_t nx, std::size_t ny, std::size_t nz)
{
    return {nx, ny, nz, 10e-6, 10e-6, 1e-3, 632e-9};
}

ComplexField2D field_of(CPlane values, double pitch = 5e-6, double wavelength = 632e-9)
{
    return {std::move(values), pitch, wavelength};
}

double real_dot(const RPlane& a, const RPlane& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double volume_dot(const SparseVolume& x, const DenseStack& y)
{
    double s = 0.0;
    for (std::size_t k = 0; k < x.planes.size(); ++k)
        for (const auto& e : x.planes[k].entries) s += std::real(std::conj(e.value) * y[k](e.row, e.col));
    return s;
}

double squared_residual(const HoloOperator& op, const SparseVolume& x, const RPlane& b)
{
    const auto hx = op.forward(x);
    double s = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) s += (hx.data[i] - b.data[i]) * (hx.data[i] - b.data[i]);
    return s;
}

}  // namespace

TEST_CASE("fft matches the direct DFT and round-trips")
{
    std::mt19937_64 rng(3);
    for (auto [r, c] : {std::pair<std::size_t, std::size_t>{6, 10}, {8, 8}, {7, 5}}) {
        const auto a = testing::random_cplane(r, c, rng);
        auto b = a;
        Fft2D fft(r, c);
        fft.forward(b.data);
        CHECK(rel_diff(b, testing::naive_dft(a)) < 1e-12);
        fft.inverse(b.data);
        CHECK(rel_diff(b, a) < 1e-14);
    }
}

TEST_CASE("frequency index puts Nyquist on the positive side")
{
    CHECK(frequency_index(0, 8) == 0);
    CHECK(frequency_index(3, 8) == 3);
    CHECK(frequency_index(4, 8) == 4);
    CHECK(frequency_index(5, 8) == -3);
    CHECK(frequency_index(2, 5) == 2);
    CHECK(frequency_index(3, 5) == -2);
}

TEST_CASE("transfer function examples")
{
    const double lambda = 632e-9;
    const Complex dc = transfer_function(0.0, 0.0, lambda, lambda);
    CHECK(std::abs(dc - Complex(1.0, 0.0)) < 1e-12);
    CHECK(std::abs(dc - std::exp(Complex(0.0, 2.0 * M_PI))) < 1e-12);

    for (double a : {0.0, 0.3, 0.7, 0.99})
        CHECK(std::abs(transfer_function(a / lambda, 0.1 / lambda, 0.0, lambda) - 1.0) < 1e-15);

    CHECK(transfer_function(1.5 / lambda, 0.0, 1e-3, lambda) == Complex(0.0, 0.0));
    CHECK(transfer_function(0.8 / lambda, 0.8 / lambda, 1e-3, lambda) == Complex(0.0, 0.0));

    // unit modulus inside the band, conjugate for negative distance
    const Complex t = transfer_function(0.3 / lambda, -0.2 / lambda, 2.5e-4, lambda);
    CHECK(std::abs(std::abs(t) - 1.0) < 1e-14);
    CHECK(std::abs(transfer_function(0.3 / lambda, -0.2 / lambda, -2.5e-4, lambda) - std::conj(t)) < 1e-14);

    // carrier removal divides out the on-axis phase
    const double z = 1.234e-3;
    const Complex kept = transfer_function(0.1 / lambda, 0.0, z, lambda, Carrier::keep);
    const Complex removed = transfer_function(0.1 / lambda, 0.0, z, lambda, Carrier::remove);
    CHECK(std::abs(removed * std::exp(Complex(0.0, 2.0 * M_PI * z / lambda)) - kept) < 1e-9);
    CHECK(std::abs(transfer_function(0.0, 0.0, z, lambda, Carrier::remove) - 1.0) < 1e-15);
}

TEST_CASE("propagate: identity, energy, round trip")
{
    std::mt19937_64 rng(5);
    const auto f = field_of(testing::random_cplane(32, 48, rng));

    SUBCASE("zero distance is the identity")
    {
        CHECK(rel_diff(propagate(f, 0.0).values, f.values) < 1e-12);
    }

    SUBCASE("band-limited input keeps its energy")
    {
        // random spectrum restricted to propagating frequencies
        const std::size_t n = 64;
        const double pitch = 0.4e-6, lambda = 632e-9;
        CPlane spec(n, n);
        std::normal_distribution<double> g(0.0, 1.0);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                const double fx = static_cast<double>(frequency_index(c, n)) / (static_cast<double>(n) * pitch);
                const double fy = static_cast<double>(frequency_index(r, n)) / (static_cast<double>(n) * pitch);
                if (lambda * lambda * (fx * fx + fy * fy) <= 1.0) spec(r, c) = {g(rng), g(rng)};
            }
        Fft2D(n, n).inverse(spec.data);
        const auto in = field_of(spec, pitch, lambda);
        for (double z : {1e-6, 3.7e-5, -2e-4, 1e-2}) {
            const auto out = propagate(in, z);
            CHECK(std::abs(testing::norm2(out.values) / testing::norm2(in.values) - 1.0) < 1e-10);
        }
    }

    SUBCASE("forward then backward recovers the field")
    {
        // pitch coarse enough that every frequency propagates
        for (double z : {1e-4, 2.5e-3}) {
            const auto back = propagate(propagate(f, z), -z);
            CHECK(rel_diff(back.values, f.values) < 1e-10);
        }
        for (Carrier c : {Carrier::keep, Carrier::remove}) {
            const auto back = propagate(propagate(f, 7e-4, c), -7e-4, c);
            CHECK(rel_diff(back.values, f.values) < 1e-10);
        }
    }

    SUBCASE("geometry is preserved and invalid fields rejected")
    {
        const auto out = propagate(f, 1e-3);
        CHECK(out.width() == f.width());
        CHECK(out.height() == f.height());
        CHECK(out.pitch == f.pitch);
        CHECK(out.wavelength == f.wavelength);
        auto bad = f;
        bad.pitch = 0.0;
        CHECK_THROWS_AS(propagate(bad, 1e-3), std::invalid_argument);
        bad = f;
        bad.values.data[3] = Complex(std::nan(""), 0.0);
        CHECK_THROWS_AS(propagate(bad, 1e-3), std::invalid_argument);
    }
}

TEST_CASE("forward and adjoint trivial cases")
{
    const auto g = small_geom(24, 16, 5);
    const HoloOperator op(g);
    CHECK(op.forward(SparseVolume(g)) == RPlane(g.ny, g.nx));
    const auto adj = op.adjoint(RPlane(g.ny, g.nx));
    REQUIRE(adj.size() == g.nz);
    for (const auto& p : adj) CHECK(p == CPlane(g.ny, g.nx));

    // one plane at the sensor: the adjoint is the identity
    std::mt19937_64 rng(8);
    VolumeGeometry g0{20, 12, 1, 10e-6, 10e-6, 0.0, 632e-9};
    const auto r = testing::random_rplane(g0.ny, g0.nx, rng);
    for (Carrier c : {Carrier::keep, Carrier::remove}) {
        const auto a0 = HoloOperator(g0, {c, 1, 8}).adjoint(r);
        for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(a0[0].data[i] - r.data[i]) < 1e-12);
    }
}

TEST_CASE("forward is linear")
{
    std::mt19937_64 rng(11);
    const auto g = small_geom(32, 24, 11);
    const HoloOperator op(g);
    const auto x1 = testing::random_volume(g, 0.05, rng);
    const auto x2 = testing::random_volume(g, 0.05, rng);
    const auto sum = op.forward(lincomb(1.0, x1, 1.0, x2));
    const auto f1 = op.forward(x1), f2 = op.forward(x2);
    RPlane expect(g.ny, g.nx);
    for (std::size_t i = 0; i < expect.size(); ++i) expect.data[i] = f1.data[i] + f2.data[i];
    CHECK(rel_diff(sum, expect) < 1e-10);

    const auto scaled = op.forward(lincomb(-2.5, x1, 0.0, x2));
    for (std::size_t i = 0; i < expect.size(); ++i) expect.data[i] = -2.5 * f1.data[i];
    CHECK(rel_diff(scaled, expect) < 1e-10);
}

TEST_CASE("adjoint dot-product identity")
{
    std::mt19937_64 rng(13);
    for (int padding : {1, 2})
        for (Carrier c : {Carrier::keep, Carrier::remove}) {
            const auto g = small_geom(20, 28, 6);
            const HoloOperator op(g, {c, padding, 8});
            for (int trial = 0; trial < 5; ++trial) {
                const auto x = testing::random_volume(g, 0.1, rng);
                const auto r = testing::random_rplane(g.ny, g.nx, rng);
                const double lhs = real_dot(op.forward(x), r);
                const double rhs = volume_dot(x, op.adjoint(r));
                CHECK(std::abs(lhs - rhs) <= 1e-8 * std::abs(lhs));
            }
        }
}

TEST_CASE("adjoint plane k is propagation by +z_k")
{
    std::mt19937_64 rng(17);
    const auto g = small_geom(16, 16, 3);
    const auto r = testing::random_rplane(g.ny, g.nx, rng);
    const auto adj = HoloOperator(g, {Carrier::keep, 1, 8}).adjoint(r);
    CPlane rc(g.ny, g.nx);
    for (std::size_t i = 0; i < r.size(); ++i) rc.data[i] = r.data[i];
    for (std::size_t k = 0; k < g.nz; ++k) {
        const auto p = propagate({rc, g.pitch, g.wavelength}, g.plane_depth(k), Carrier::keep);
        CHECK(rel_diff(adj[k], p.values) < 1e-12);
    }
}

TEST_CASE("OpenMP operator equals the serial reference")
{
    std::mt19937_64 rng(19);
    const auto g = small_geom(32, 32, 19);
    const auto x = testing::random_volume(g, 0.03, rng);
    const auto r = testing::random_rplane(g.ny, g.nx, rng);
    for (int padding : {1, 2}) {
        const OperatorOptions opts{Carrier::remove, padding, 8};
        const HoloOperator op(g, opts);
        CHECK(rel_diff(op.forward(x), serial::forward(x, g, opts)) < 1e-12);
        const auto a = op.adjoint(r);
        const auto s = serial::adjoint(r, g, opts);
        for (std::size_t k = 0; k < g.nz; ++k) CHECK(rel_diff(a[k], s[k]) < 1e-12);
    }
}

TEST_CASE("forward output does not depend on the thread count")
{
    std::mt19937_64 rng(23);
    const auto g = small_geom(32, 32, 21);
    const auto x = testing::random_volume(g, 0.02, rng);
    const HoloOperator op(g);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto one = op.forward(x);
    omp_set_num_threads(4);
    const auto four = op.forward(x);
    omp_set_num_threads(saved);
    CHECK(one == four);
}

TEST_CASE("geometry mismatches are rejected")
{
    const auto g = small_geom(16, 16, 4);
    const HoloOperator op(g);
    CHECK_THROWS_AS(op.forward(SparseVolume(small_geom(16, 16, 5))), GeometryError);
    CHECK_THROWS_AS(op.forward(SparseVolume(small_geom(8, 16, 4))), GeometryError);
    CHECK_THROWS_AS(op.adjoint(RPlane(15, 16)), GeometryError);
    CHECK_THROWS_AS(op.data_gradient(SparseVolume(g), RPlane(16, 17)), GeometryError);
}

TEST_CASE("data gradient")
{
    std::mt19937_64 rng(29);
    const auto g = small_geom(16, 16, 4);
    const HoloOperator op(g);

    SUBCASE("zero volume gives -2 H* b")
    {
        const auto b = testing::random_rplane(g.ny, g.nx, rng);
        const auto grad = op.data_gradient(SparseVolume(g), b);
        const auto adj = op.adjoint(b);
        for (std::size_t k = 0; k < g.nz; ++k)
            for (std::size_t i = 0; i < adj[k].size(); ++i)
                CHECK(std::abs(grad[k].data[i] + 2.0 * adj[k].data[i]) < 1e-12);
    }

    SUBCASE("exact data gives zero gradient")
    {
        const auto x = testing::random_volume(g, 0.1, rng);
        const auto b = op.forward(x);
        for (const auto& p : op.data_gradient(x, b))
            for (const auto& v : p.data) CHECK(std::abs(v) < 1e-10);
    }

    SUBCASE("matches central finite differences per voxel")
    {
        const auto x = testing::random_volume(g, 0.2, rng);
        const auto b = testing::random_rplane(g.ny, g.nx, rng);
        const auto grad = op.data_gradient(x, b);
        // f is quadratic, so central differences are exact up to rounding for any step
        const double h = 0.5;
        double worst = 0.0;
        for (std::size_t k = 0; k < g.nz; ++k) {
            const CPlane base = to_dense(x.planes[k]);
            for (std::size_t i = 0; i < base.size(); ++i)
                for (const Complex dir : {Complex(1.0, 0.0), Complex(0.0, 1.0)}) {
                    auto xp = x, xm = x;
                    CPlane dp = base, dm = base;
                    dp.data[i] += h * dir;
                    dm.data[i] -= h * dir;
                    xp.planes[k] = from_dense(dp);
                    xm.planes[k] = from_dense(dm);
                    const double fd = (squared_residual(op, xp, b) - squared_residual(op, xm, b)) / (2.0 * h);
                    // directional derivative along dir is Re(conj(dir) * g)
                    const double an = std::real(std::conj(dir) * grad[k].data[i]);
                    worst = std::max(worst, std::abs(fd - an) / std::abs(an));
                }
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("single voxel forward equals the real part of the point spread")
{
    const auto g = small_geom(32, 32, 4);
    const OperatorOptions opts{Carrier::keep, 1, 8};
    const HoloOperator op(g, opts);
    SparseVolume x(g);
    x.planes[2].entries.push_back({16, 16, Complex(1.0, 0.0)});
    const auto hx = op.forward(x);
    CPlane delta(g.ny, g.nx);
    delta(16, 16) = 1.0;
    const auto psf = propagate({delta, g.pitch, g.wavelength}, -g.plane_depth(2), Carrier::keep);
    for (std::size_t i = 0; i < hx.size(); ++i) CHECK(std::abs(hx.data[i] - std::real(psf.values.data[i])) < 1e-12);
}

TEST_CASE("point spread agrees with Rayleigh-Sommerfeld direct summation")
{
    // The discrete transfer function drops evanescent waves and its grid is periodic, so the
    // agreement with the free-space first-kind integral is limited by those two effects; at
    // sub-wavelength pitch, 25 wavelengths from the source, on a grid wide enough to push the
    // periodic images out, both are below 1e-3 over the central 32x32 window.
    const double lambda = 632e-9;
    const double pitch = 0.45 * lambda;
    const double z = 25.0 * lambda;
    const std::size_t n = 4096, win = 32;
    CPlane delta(n, n);
    delta(0, 0) = 1.0;
    const auto u = propagate({std::move(delta), pitch, lambda}, z, Carrier::keep);

    const double k = 2.0 * M_PI / lambda;
    double num = 0.0, den = 0.0;
    for (long dy = -static_cast<long>(win / 2); dy < static_cast<long>(win / 2); ++dy)
        for (long dx = -static_cast<long>(win / 2); dx < static_cast<long>(win / 2); ++dx) {
            const double x = static_cast<double>(dx) * pitch, y = static_cast<double>(dy) * pitch;
            const double r = std::sqrt(x * x + y * y + z * z);
            // U(x, y) = (1 / 2 pi) z / r^2 (1 / r - i k) e^{i k r} dA for a unit sample of area pitch^2
            const Complex rs = z / (2.0 * M_PI * r * r) * Complex(1.0 / r, -k) * std::exp(Complex(0.0, k * r)) *
                               (pitch * pitch);
            const auto row = static_cast<std::size_t>((dy + static_cast<long>(n)) % static_cast<long>(n));
            const auto col = static_cast<std::size_t>((dx + static_cast<long>(n)) % static_cast<long>(n));
            num += std::norm(u.values(row, col) - rs);
            den += std::norm(rs);
        }
    const double rel = std::sqrt(num / den);
    MESSAGE("relative L2 error vs direct summation: " << rel);
    CHECK(rel < 1e-3);
}

TEST_CASE("power iteration estimates the operator norm")
{
    // With the carrier removed a constant plane propagates unchanged, so the all-ones volume
    // attains |Hx|^2 / |x|^2 = nz; the triangle inequality bounds |H|^2 by nz from above.
    std::mt19937_64 rng(31);
    const auto g = small_geom(16, 16, 3);
    const HoloOperator op(g);
    const double l = op.norm_squared_estimate(30);
    const double nz = static_cast<double>(g.nz);
    CHECK(l <= nz * (1.0 + 1e-12));
    CHECK(l >= 0.95 * nz);
    for (int t = 0; t < 5; ++t) {
        const auto x = testing::random_volume(g, 1.0, rng);
        const auto hx = op.forward(x);
        double num = 0.0, den = 0.0;
        for (double v : hx.data) num += v * v;
        for (const auto& p : x.planes) den += squared_norm(p);
        CHECK(num / den <= nz * (1.0 + 1e-12));
    }
}
