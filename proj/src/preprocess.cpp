#include "rihvr/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rihvr {

std::vector<RPlane> preprocess_background(const std::vector<RPlane>& stack, std::size_t window, double eps)
{
    if (window < 3 || window % 2 == 0) throw std::invalid_argument("background window must be odd and >= 3");
    if (window > stack.size())
        throw std::invalid_argument("background window (" + std::to_string(window) + ") exceeds the stack length (" +
                                    std::to_string(stack.size()) + ")");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    for (const auto& f : stack)
        if (!f.same_shape(stack.front())) throw std::invalid_argument("stack frames differ in size");

    const auto n = static_cast<long>(stack.size());
    const long half = static_cast<long>(window / 2);
    const std::size_t np = stack.front().size();

    // running window sum; frames enter and leave as the window slides
    std::vector<double> sum(np, 0.0);
    long lo = 0, hi = -1;  // current window [lo, hi]
    std::vector<RPlane> out;
    out.reserve(stack.size());
    for (long t = 0; t < n; ++t) {
        const long want_lo = std::max(0L, t - half);
        const long want_hi = std::min(n - 1, t + half);
        while (hi < want_hi) {
            ++hi;
            for (std::size_t i = 0; i < np; ++i) sum[i] += stack[hi].data[i];
        }
        while (lo < want_lo) {
            for (std::size_t i = 0; i < np; ++i) sum[i] -= stack[lo].data[i];
            ++lo;
        }
        const double count = static_cast<double>(hi - lo + 1);
        RPlane frame(stack[t].rows, stack[t].cols);
        for (std::size_t i = 0; i < np; ++i) {
            const double m = sum[i] / count;
            frame.data[i] = (stack[t].data[i] - m) / std::sqrt(std::max(m, eps));
        }
        out.push_back(std::move(frame));
    }
    return out;
}

RPlane normalize_mean(const RPlane& image)
{
    if (image.size() == 0) throw std::invalid_argument("normalize_mean: empty image");
    double mean = 0.0;
    for (double v : image.data) mean += v;
    mean /= static_cast<double>(image.size());
    if (!(mean > 0.0)) throw std::invalid_argument("normalize_mean: image mean must be positive");
    RPlane out(image.rows, image.cols);
    for (std::size_t i = 0; i < image.size(); ++i) out.data[i] = image.data[i] / mean - 1.0;
    return out;
}

}  // namespace rihvr
