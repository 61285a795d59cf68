#include "rihvr/track.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace rihvr {

namespace {

double dist2(const Vec3& a, const Vec3& b)
{
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace

std::vector<Vec3> Trajectory::velocities() const
{
    const std::size_t n = samples.size();
    std::vector<Vec3> out(n, Vec3{0.0, 0.0, 0.0});
    if (n < 2) return out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) {
            out[i] = sub(samples[1].position, samples[0].position);
        } else if (i + 1 == n) {
            out[i] = sub(samples[i].position, samples[i - 1].position);
        } else {
            const Vec3 d = sub(samples[i + 1].position, samples[i - 1].position);
            out[i] = {0.5 * d[0], 0.5 * d[1], 0.5 * d[2]};
        }
    }
    return out;
}

void Trajectory::check_invariants() const
{
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (samples[i].frame != samples[i - 1].frame + 1)
            throw std::invalid_argument("trajectory frames must be consecutive");
    for (const auto& s : samples)
        if (s.orientation && std::abs(std::sqrt(dot(*s.orientation, *s.orientation)) - 1.0) > 1e-9)
            throw std::invalid_argument("trajectory orientation must be unit length");
}

std::vector<Trajectory> link_frames(const std::vector<DetectionFrame>& frames, double max_disp, std::size_t first_frame)
{
    if (!(max_disp > 0.0)) throw std::invalid_argument("link_frames: max_disp must be positive");
    const double max2 = max_disp * max_disp;

    std::vector<Trajectory> trajs;
    std::vector<std::size_t> active;  // indices into trajs ending at the previous frame

    auto start = [&](std::size_t frame, const Detection& d) {
        Trajectory t;
        t.id = static_cast<std::uint32_t>(trajs.size());
        t.samples.push_back({frame, d.id, d.position, d.orientation});
        trajs.push_back(std::move(t));
        return trajs.size() - 1;
    };

    for (std::size_t f = 0; f < frames.size(); ++f) {
        const std::size_t frame = first_frame + f;
        // detections are considered in id order so ties resolve deterministically
        std::vector<std::size_t> order(frames[f].size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return frames[f][a].id < frames[f][b].id; });

        std::vector<bool> det_used(order.size(), false);
        std::vector<bool> trk_used(active.size(), false);
        std::vector<std::size_t> next_active;

        for (bool progress = true; progress;) {
            progress = false;
            std::vector<long> best_det(active.size(), -1);
            std::vector<long> best_trk(order.size(), -1);
            std::vector<double> best_det_d(active.size(), std::numeric_limits<double>::infinity());
            std::vector<double> best_trk_d(order.size(), std::numeric_limits<double>::infinity());
            for (std::size_t a = 0; a < active.size(); ++a) {
                if (trk_used[a]) continue;
                const Vec3& p = trajs[active[a]].samples.back().position;
                for (std::size_t o = 0; o < order.size(); ++o) {
                    if (det_used[o]) continue;
                    const double d2 = dist2(p, frames[f][order[o]].position);
                    if (d2 > max2) continue;
                    // strict comparisons: earlier (lower id) candidates win ties
                    if (d2 < best_det_d[a]) {
                        best_det_d[a] = d2;
                        best_det[a] = static_cast<long>(o);
                    }
                    if (d2 < best_trk_d[o]) {
                        best_trk_d[o] = d2;
                        best_trk[o] = static_cast<long>(a);
                    }
                }
            }
            for (std::size_t a = 0; a < active.size(); ++a) {
                const long o = best_det[a];
                if (o < 0 || best_trk[o] != static_cast<long>(a)) continue;
                const Detection& d = frames[f][order[o]];
                trajs[active[a]].samples.push_back({frame, d.id, d.position, d.orientation});
                trk_used[a] = true;
                det_used[o] = true;
                next_active.push_back(active[a]);
                progress = true;
            }
        }
        for (std::size_t o = 0; o < order.size(); ++o)
            if (!det_used[o]) next_active.push_back(start(frame, frames[f][order[o]]));
        std::sort(next_active.begin(), next_active.end());
        active = std::move(next_active);
    }
    return trajs;
}

std::vector<Trajectory> filter_min_duration(std::vector<Trajectory> trajs, std::size_t min_frames)
{
    if (min_frames < 1) throw std::invalid_argument("min_frames must be >= 1");
    std::erase_if(trajs, [min_frames](const Trajectory& t) { return t.length() < min_frames; });
    return trajs;
}

std::vector<double> savitzky_golay(std::span<const double> y, int window, int order)
{
    if (window < 1) throw std::invalid_argument("savitzky_golay: window must be >= 1");
    if (order < 0 || order >= window) throw std::invalid_argument("savitzky_golay: order must be in [0, window)");
    const auto n = static_cast<long>(y.size());
    if (window > n) throw std::invalid_argument("savitzky_golay: window longer than signal");

    std::vector<double> out(y.size());
    const long left = (window - 1) / 2;
    Eigen::MatrixXd A(window, order + 1);
    Eigen::VectorXd rhs(window);
    for (long i = 0; i < n; ++i) {
        const long s = std::clamp(i - left, 0L, n - window);
        for (long r = 0; r < window; ++r) {
            const double t = static_cast<double>(s + r - i);
            double pw = 1.0;
            for (int c = 0; c <= order; ++c) {
                A(r, c) = pw;
                pw *= t;
            }
            rhs(r) = y[static_cast<std::size_t>(s + r)];
        }
        const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(rhs);
        out[static_cast<std::size_t>(i)] = coef(0);
    }
    return out;
}

std::vector<double> tv_denoise_1d(std::span<const double> input, double lambda)
{
    if (lambda < 0.0) throw std::invalid_argument("tv_denoise_1d: weight must be >= 0");
    const auto width = static_cast<long>(input.size());
    std::vector<double> output(input.begin(), input.end());
    if (width == 0 || lambda == 0.0) return output;

    long k = 0, k0 = 0, kplus = 0, kminus = 0;
    double umin = lambda, umax = -lambda;
    double vmin = input[0] - lambda, vmax = input[0] + lambda;
    const double twolambda = 2.0 * lambda;
    const double minlambda = -lambda;
    for (;;) {
        while (k == width - 1) {
            if (umin < 0.0) {
                do output[k0++] = vmin;
                while (k0 <= kminus);
                k = kminus = k0;
                vmin = input[k];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if (umax > 0.0) {
                do output[k0++] = vmax;
                while (k0 <= kplus);
                k = kplus = k0;
                vmax = input[k];
                umax = minlambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / static_cast<double>(k - k0 + 1);
                do output[k0++] = vmin;
                while (k0 <= k);
                return output;
            }
        }
        if ((umin += input[k + 1] - vmin) < minlambda) {
            do output[k0++] = vmin;
            while (k0 <= kminus);
            k = kplus = kminus = k0;
            vmin = input[k];
            vmax = vmin + twolambda;
            umin = lambda;
            umax = minlambda;
        } else if ((umax += input[k + 1] - vmax) > lambda) {
            do output[k0++] = vmax;
            while (k0 <= kplus);
            k = kplus = kminus = k0;
            vmax = input[k];
            vmin = vmax - twolambda;
            umin = lambda;
            umax = minlambda;
        } else {
            ++k;
            if (umin >= lambda) {
                kminus = k;
                vmin += (umin - lambda) / static_cast<double>(kminus - k0 + 1);
                umin = lambda;
            }
            if (umax <= minlambda) {
                kplus = k;
                vmax += (umax + lambda) / static_cast<double>(kplus - k0 + 1);
                umax = minlambda;
            }
        }
    }
}

Trajectory smooth_trajectory(const Trajectory& traj, const Smoothing& method)
{
    Trajectory out = traj;
    const std::size_t n = traj.samples.size();
    if (n == 0) return out;
    std::vector<double> axis(n);
    for (int a = 0; a < 3; ++a) {
        for (std::size_t i = 0; i < n; ++i) axis[i] = traj.samples[i].position[a];
        std::vector<double> filtered;
        if (const auto* sg = std::get_if<SavitzkyGolay>(&method)) {
            if (sg->window > static_cast<int>(n)) {
                std::cerr << "warning: trajectory " << traj.id << " (" << n << " frames) is shorter than the "
                          << sg->window << "-frame smoothing window; left unsmoothed\n";
                return out;
            }
            filtered = savitzky_golay(axis, sg->window, sg->order);
        } else {
            filtered = tv_denoise_1d(axis, std::get<TvSmoothing>(method).weight);
        }
        for (std::size_t i = 0; i < n; ++i) out.samples[i].position[a] = filtered[i];
    }
    return out;
}

std::vector<double> rotation_rate(const Trajectory& traj, double frame_interval)
{
    if (!(frame_interval > 0.0)) throw std::invalid_argument("rotation_rate: frame interval must be positive");
    const std::size_t n = traj.samples.size();
    std::vector<Vec3> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!traj.samples[i].orientation) throw std::invalid_argument("rotation_rate: trajectory has no orientations");
        p[i] = *traj.samples[i].orientation;
        if (i > 0 && dot(p[i], p[i - 1]) < 0.0) p[i] = {-p[i][0], -p[i][1], -p[i][2]};
    }
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) {
            out[i] = std::sqrt(dist2(p[1], p[0])) / frame_interval;
        } else if (i + 1 == n) {
            out[i] = std::sqrt(dist2(p[i], p[i - 1])) / frame_interval;
        } else {
            out[i] = std::sqrt(dist2(p[i + 1], p[i - 1])) / (2.0 * frame_interval);
        }
    }
    return out;
}

}  // namespace rihvr
