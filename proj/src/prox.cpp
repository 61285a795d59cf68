#include "rihvr/prox.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rihvr {

void RegularizerWeights::validate() const
{
    if (!(lambda_l1 >= 0.0) || !(lambda_tv >= 0.0))
        throw std::invalid_argument("regularization weights must be non-negative");
}

double l1_norm(const CPlane& plane)
{
    double acc = 0.0;
    for (const auto& v : plane.data) acc += std::abs(v);
    return acc;
}

double l1_norm(const SparsePlane& plane)
{
    double acc = 0.0;
    for (const auto& e : plane.entries) acc += std::abs(e.value);
    return acc;
}

namespace {

template <class Get>
double tv_impl(std::size_t rows, std::size_t cols, Get get)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double x = get(i, j);
            const double di = i > 0 ? x - get(i - 1, j) : 0.0;
            const double dj = j > 0 ? x - get(i, j - 1) : 0.0;
            acc += std::sqrt(di * di + dj * dj);
        }
    }
    return acc;
}

double tv_span(std::span<const double> v, std::size_t rows, std::size_t cols)
{
    return tv_impl(rows, cols, [&](std::size_t i, std::size_t j) { return v[i * cols + j]; });
}

}  // namespace

double tv_norm_2d(const RPlane& plane) { return tv_span(plane.data, plane.rows, plane.cols); }

double tv_norm_2d(const CPlane& plane)
{
    const auto re = tv_impl(plane.rows, plane.cols, [&](std::size_t i, std::size_t j) { return plane(i, j).real(); });
    const auto im = tv_impl(plane.rows, plane.cols, [&](std::size_t i, std::size_t j) { return plane(i, j).imag(); });
    return re + im;
}

void prox_l1_inplace(std::span<Complex> v, double tau)
{
    if (tau < 0.0) throw std::invalid_argument("prox_l1: tau must be >= 0");
    if (tau == 0.0) return;
    for (auto& c : v) {
        const double m = std::abs(c);
        c = m <= tau ? Complex{} : c * (1.0 - tau / m);
    }
}

CPlane prox_l1(const CPlane& v, double tau)
{
    CPlane out = v;
    prox_l1_inplace(out.span(), tau);
    return out;
}

RPlane prox_l1(const RPlane& v, double tau)
{
    if (tau < 0.0) throw std::invalid_argument("prox_l1: tau must be >= 0");
    RPlane out = v;
    for (auto& x : out.data) {
        const double m = std::abs(x);
        x = m <= tau ? 0.0 : x - std::copysign(tau, x);
    }
    return out;
}

void TvWorkspace::resize(std::size_t n)
{
    p.assign(n, 0.0);
    q.assign(n, 0.0);
    r.assign(n, 0.0);
    s.assign(n, 0.0);
    x.assign(n, 0.0);
}

void prox_tv_2d_inplace(std::span<double> v, std::size_t rows, std::size_t cols, double tau, int inner_iters,
                        TvWorkspace& ws)
{
    if (tau < 0.0) throw std::invalid_argument("prox_tv_2d: tau must be >= 0");
    if (inner_iters < 1) throw std::invalid_argument("prox_tv_2d: inner_iters must be >= 1");
    if (v.size() != rows * cols) throw std::invalid_argument("prox_tv_2d: size mismatch");
    if (tau == 0.0 || v.empty()) return;

    const std::size_t n = v.size();
    ws.resize(n);
    double* p = ws.p.data();  // dual, row-direction differences (p[0][*] == 0)
    double* q = ws.q.data();  // dual, column-direction differences (q[*][0] == 0)
    double* r = ws.r.data();  // extrapolated duals
    double* s = ws.s.data();
    double* x = ws.x.data();
    const double* vin = v.data();
    const double step = 1.0 / (8.0 * tau);

    // x = v - tau * D^T(a, b); a[0][*] and b[*][0] are kept at zero
    auto primal = [&](const double* a, const double* b) {
        for (std::size_t i = 0; i < rows; ++i) {
            const std::size_t row = i * cols;
            const bool last_row = i + 1 == rows;
            for (std::size_t j = 0; j + 1 < cols; ++j) {
                const std::size_t k = row + j;
                const double below = last_row ? 0.0 : a[k + cols];
                x[k] = vin[k] - tau * (a[k] + b[k] - below - b[k + 1]);
            }
            const std::size_t k = row + cols - 1;
            const double below = last_row ? 0.0 : a[k + cols];
            x[k] = vin[k] - tau * (a[k] + b[k] - below);
        }
    };
    double t = 1.0;
    for (int it = 0; it < inner_iters; ++it) {
        primal(r, s);
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double beta = (t - 1.0) / tn;
        auto update = [&](std::size_t k, double a, double b) {
            const double norm2 = a * a + b * b;
            if (norm2 > 1.0) {
                const double inv = 1.0 / std::sqrt(norm2);
                a *= inv;
                b *= inv;
            }
            r[k] = a + beta * (a - p[k]);
            s[k] = b + beta * (b - q[k]);
            p[k] = a;
            q[k] = b;
        };
        update(0, 0.0, 0.0);
        for (std::size_t j = 1; j < cols; ++j) update(j, 0.0, s[j] + step * (x[j] - x[j - 1]));
        for (std::size_t i = 1; i < rows; ++i) {
            const std::size_t row = i * cols;
            update(row, r[row] + step * (x[row] - x[row - cols]), 0.0);
            for (std::size_t k = row + 1; k < row + cols; ++k)
                update(k, r[k] + step * (x[k] - x[k - cols]), s[k] + step * (x[k] - x[k - 1]));
        }
        t = tn;
    }
    primal(p, q);

    // The exact minimizer lies in [min v, max v]. Clamping an inexact iterate into that range
    // never raises the objective (the pointwise map is monotone and 1-Lipschitz, so differences
    // do not grow, and every clamped value moves toward its v).
    const auto [lo, hi] = std::minmax_element(vin, vin + n);
    const double vmin = *lo, vmax = *hi;
    for (std::size_t k = 0; k < n; ++k) x[k] = std::clamp(x[k], vmin, vmax);

    double dist2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) dist2 += (x[k] - vin[k]) * (x[k] - vin[k]);
    const double obj_x = 0.5 * dist2 + tau * tv_span({x, n}, rows, cols);
    const double obj_v = tau * tv_span(v, rows, cols);
    if (obj_x <= obj_v) std::copy(x, x + n, v.begin());
}

RPlane prox_tv_2d(const RPlane& v, double tau, int inner_iters)
{
    RPlane out = v;
    TvWorkspace ws;
    prox_tv_2d_inplace(out.span(), out.rows, out.cols, tau, inner_iters, ws);
    return out;
}

void prox_fl_inplace(CPlane& v, double tau_l1, double tau_tv, int inner_iters, TvWorkspace& ws)
{
    if (tau_l1 < 0.0 || tau_tv < 0.0) throw std::invalid_argument("prox_fl: taus must be >= 0");
    if (tau_l1 > 0.0) {
        // The TV proximal keeps each component within [min, max] of its input (clamped
        // explicitly for the inexact iterate), so when every value lies inside the l1 dead
        // zone the fused result is exactly zero.
        double re = 0.0, im = 0.0;
        for (const auto& c : v.data) {
            re = std::max(re, std::abs(c.real()));
            im = std::max(im, std::abs(c.imag()));
        }
        if (std::hypot(re, im) <= tau_l1) {
            std::fill(v.data.begin(), v.data.end(), Complex{});
            return;
        }
    }
    if (tau_tv > 0.0) {
        std::vector<double> part(v.size());
        for (int component = 0; component < 2; ++component) {
            bool any = false;
            for (std::size_t i = 0; i < v.size(); ++i) {
                part[i] = component == 0 ? v.data[i].real() : v.data[i].imag();
                any = any || part[i] != 0.0;
            }
            if (!any) continue;  // TV proximal of zero is zero
            prox_tv_2d_inplace(part, v.rows, v.cols, tau_tv, inner_iters, ws);
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (component == 0)
                    v.data[i].real(part[i]);
                else
                    v.data[i].imag(part[i]);
            }
        }
    }
    prox_l1_inplace(v.span(), tau_l1);
}

CPlane prox_fl(const CPlane& v, double tau_l1, double tau_tv, int inner_iters)
{
    CPlane out = v;
    TvWorkspace ws;
    prox_fl_inplace(out, tau_l1, tau_tv, inner_iters, ws);
    return out;
}

}  // namespace rihvr
