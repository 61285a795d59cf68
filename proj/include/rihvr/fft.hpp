#pragma once

#include "rihvr/grid.hpp"

#include <cstddef>
#include <span>

namespace rihvr {

/// In-place 2D complex DFT over a rows x cols row-major buffer, backed by FFTW.
///
/// Plans are created once per shape and cached process-wide; plan creation is
/// serialized, execution is safe from any number of threads. The inverse is
/// normalized by 1/(rows*cols) so that inverse(forward(a)) == a.
class Fft2D {
public:
    Fft2D(std::size_t rows, std::size_t cols);

    void forward(std::span<Complex> data) const;
    void inverse(std::span<Complex> data) const;

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

private:
    std::size_t rows_;
    std::size_t cols_;
    void* fwd_;
    void* inv_;
};

/// Signed DFT frequency index for bin i of n; the Nyquist bin (n even) maps to +n/2.
inline long frequency_index(std::size_t i, std::size_t n)
{
    const auto si = static_cast<long>(i);
    const auto sn = static_cast<long>(n);
    return (2 * si <= sn) ? si : si - sn;
}

}  // namespace rihvr
