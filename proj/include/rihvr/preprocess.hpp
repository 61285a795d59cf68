#pragma once

#include "rihvr/grid.hpp"

#include <vector>

namespace rihvr {

/// Sliding-window background removal over a time-ordered stack: each frame becomes
/// (I - M) / sqrt(max(M, eps)) where M is the mean of the window centered on it,
/// truncated at the ends of the stack. The window must be odd, >= 3 and <= stack length.
std::vector<RPlane> preprocess_background(const std::vector<RPlane>& stack, std::size_t window,
                                          double eps = 1e-12);

/// Single-frame alternative: I / mean(I) - 1.
RPlane normalize_mean(const RPlane& image);

}  // namespace rihvr
