#include "rihvr/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rihvr {

namespace {

struct PlanPair {
    fftw_plan fwd;
    fftw_plan inv;
};

std::mutex& plan_mutex()
{
    static std::mutex m;
    return m;
}

PlanPair plans_for(std::size_t rows, std::size_t cols)
{
    static std::map<std::pair<std::size_t, std::size_t>, PlanPair> cache;
    std::lock_guard lock(plan_mutex());
    auto key = std::make_pair(rows, cols);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    std::vector<Complex> scratch(rows * cols);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair p{
        fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf, FFTW_FORWARD, flags),
        fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf, FFTW_BACKWARD, flags),
    };
    if (!p.fwd || !p.inv) throw std::runtime_error("FFTW plan creation failed");
    cache.emplace(key, p);
    return p;
}

}  // namespace

Fft2D::Fft2D(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols)
{
    if (rows == 0 || cols == 0) throw std::invalid_argument("Fft2D: empty shape");
    auto p = plans_for(rows, cols);
    fwd_ = p.fwd;
    inv_ = p.inv;
}

void Fft2D::forward(std::span<Complex> data) const
{
    if (data.size() != rows_ * cols_) throw std::invalid_argument("Fft2D::forward: size mismatch");
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(static_cast<fftw_plan>(fwd_), buf, buf);
}

void Fft2D::inverse(std::span<Complex> data) const
{
    if (data.size() != rows_ * cols_) throw std::invalid_argument("Fft2D::inverse: size mismatch");
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(static_cast<fftw_plan>(inv_), buf, buf);
    const double scale = 1.0 / static_cast<double>(data.size());
    for (auto& v : data) v *= scale;
}

}  // namespace rihvr
