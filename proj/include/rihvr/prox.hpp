#pragma once

#include "rihvr/grid.hpp"
#include "rihvr/sparse_volume.hpp"

#include <span>
#include <vector>

namespace rihvr {

struct RegularizerWeights {
    double lambda_l1 = 0.0;
    double lambda_tv = 0.0;

    void validate() const;
};

double l1_norm(const CPlane& plane);
double l1_norm(const SparsePlane& plane);

/// Isotropic total variation with backward differences; differences that would reach
/// outside the plane are zero (replicated edge).
double tv_norm_2d(const RPlane& plane);
/// TV(Re x) + TV(Im x), the penalty whose proximal operator prox_fl uses.
double tv_norm_2d(const CPlane& plane);

/// Complex soft thresholding: modulus shrunk by tau, phase kept; |v| <= tau gives exact zero.
CPlane prox_l1(const CPlane& v, double tau);
RPlane prox_l1(const RPlane& v, double tau);
void prox_l1_inplace(std::span<Complex> v, double tau);

/// Scratch buffers for the TV proximal; reuse across calls to avoid reallocation.
struct TvWorkspace {
    std::vector<double> p, q, r, s, x;
    void resize(std::size_t n);
};

/// argmin_x tau*TV(x) + 0.5*||x - v||^2 by fast gradient projection on the dual
/// (Beck & Teboulle). Never returns a point with a larger objective than v itself.
RPlane prox_tv_2d(const RPlane& v, double tau, int inner_iters);
void prox_tv_2d_inplace(std::span<double> v, std::size_t rows, std::size_t cols, double tau, int inner_iters,
                        TvWorkspace& ws);

/// Fused lasso proximal: soft threshold (modulus) of the TV proximal, with TV applied to
/// real and imaginary parts independently.
CPlane prox_fl(const CPlane& v, double tau_l1, double tau_tv, int inner_iters);
void prox_fl_inplace(CPlane& v, double tau_l1, double tau_tv, int inner_iters, TvWorkspace& ws);

}  // namespace rihvr
