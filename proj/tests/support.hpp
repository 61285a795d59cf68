#pragma once

#include "rihvr/grid.hpp"
#include "rihvr/sparse_volume.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace testing {

using rihvr::Complex;

inline rihvr::CPlane random_cplane(std::size_t rows, std::size_t cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    rihvr::CPlane p(rows, cols);
    for (auto& v : p.data) v = {n(rng), n(rng)};
    return p;
}

inline rihvr::RPlane random_rplane(std::size_t rows, std::size_t cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    rihvr::RPlane p(rows, cols);
    for (auto& v : p.data) v = n(rng);
    return p;
}

/// Volume with roughly `fill` of the voxels set to random complex values.
inline rihvr::SparseVolume random_volume(const rihvr::VolumeGeometry& g, double fill, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    rihvr::SparseVolume v(g);
    for (auto& plane : v.planes) {
        rihvr::CPlane d(g.ny, g.nx);
        for (auto& x : d.data)
            if (u(rng) < fill) x = {n(rng), n(rng)};
        plane = rihvr::from_dense(d);
    }
    return v;
}

template <class T>
double norm2(const rihvr::Plane<T>& p)
{
    double s = 0.0;
    for (const auto& v : p.data) s += std::norm(v);
    return std::sqrt(s);
}

/// ||a - b|| / ||b||.
template <class T>
double rel_diff(const rihvr::Plane<T>& a, const rihvr::Plane<T>& b)
{
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a.data[i] - b.data[i]);
        den += std::norm(b.data[i]);
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Direct O(N^2) 2D DFT, e^{-i 2 pi (ky r / R + kx c / C)}.
inline rihvr::CPlane naive_dft(const rihvr::CPlane& a, double sign = -1.0)
{
    rihvr::CPlane out(a.rows, a.cols);
    const double R = static_cast<double>(a.rows), C = static_cast<double>(a.cols);
    for (std::size_t ky = 0; ky < a.rows; ++ky)
        for (std::size_t kx = 0; kx < a.cols; ++kx) {
            Complex s{};
            for (std::size_t r = 0; r < a.rows; ++r)
                for (std::size_t c = 0; c < a.cols; ++c) {
                    const double ph = sign * 2.0 * M_PI *
                                      (static_cast<double>(ky * r) / R + static_cast<double>(kx * c) / C);
                    s += a(r, c) * Complex(std::cos(ph), std::sin(ph));
                }
            out(ky, kx) = s;
        }
    return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("rihvr_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testing
