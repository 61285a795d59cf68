#include "rihvr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace rihvr {

std::vector<double> MatchReport::abs_errors(int axis) const
{
    if (axis < 0 || axis > 2) throw std::invalid_argument("axis must be 0, 1 or 2");
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(std::abs(p.error[axis]));
    return out;
}

MatchReport match_particles(std::span<const Vec3> truth, std::span<const Vec3> detected, const MatchTolerance& tol)
{
    if (!(tol.lateral > 0.0) || !(tol.axial > 0.0)) throw std::invalid_argument("match tolerances must be positive");

    struct Candidate {
        double score;
        std::size_t t, d;
    };
    std::vector<Candidate> cands;
    for (std::size_t t = 0; t < truth.size(); ++t) {
        for (std::size_t d = 0; d < detected.size(); ++d) {
            const double dx = detected[d][0] - truth[t][0];
            const double dy = detected[d][1] - truth[t][1];
            const double dz = detected[d][2] - truth[t][2];
            const double score = (dx * dx + dy * dy) / (tol.lateral * tol.lateral) + dz * dz / (tol.axial * tol.axial);
            if (score <= 1.0) cands.push_back({score, t, d});
        }
    }
    // ties broken on positions, not input order, so the result does not depend on detection order
    std::sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score < b.score;
        if (a.t != b.t) return a.t < b.t;
        return detected[a.d] < detected[b.d];
    });

    MatchReport report;
    report.truth_count = truth.size();
    report.detected_count = detected.size();
    std::vector<bool> t_used(truth.size(), false), d_used(detected.size(), false);
    for (const auto& c : cands) {
        if (t_used[c.t] || d_used[c.d]) continue;
        t_used[c.t] = d_used[c.d] = true;
        report.pairs.push_back({c.t, c.d,
                                {detected[c.d][0] - truth[c.t][0], detected[c.d][1] - truth[c.t][1],
                                 detected[c.d][2] - truth[c.t][2]}});
    }
    std::sort(report.pairs.begin(), report.pairs.end(),
              [](const MatchPair& a, const MatchPair& b) { return a.truth < b.truth; });
    report.false_positives = detected.size() - report.pairs.size();
    report.extraction_rate =
        truth.empty() ? 0.0 : static_cast<double>(report.pairs.size()) / static_cast<double>(truth.size());
    return report;
}

double percentile(std::vector<double> values, double q)
{
    if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
    if (!(q >= 0.0 && q <= 100.0)) throw std::invalid_argument("percentile q must be in [0, 100]");
    std::sort(values.begin(), values.end());
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double error_percentile(const MatchReport& report, int axis, double q)
{
    if (report.pairs.empty()) throw std::invalid_argument("error_percentile: report has no matches");
    return percentile(report.abs_errors(axis), q);
}

double rms_velocity(const std::vector<Trajectory>& trajs, int axis)
{
    if (axis < 0 || axis > 2) throw std::invalid_argument("axis must be 0, 1 or 2");
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& t : trajs) {
        if (t.length() < 2) continue;
        for (const auto& v : t.velocities()) {
            acc += v[axis] * v[axis];
            ++n;
        }
    }
    if (n == 0) throw std::invalid_argument("rms_velocity: no velocity samples");
    return std::sqrt(acc / static_cast<double>(n));
}

Vec3 jeffery_rate(const Vec3& p, const Mat3& omega, const Mat3& strain)
{
    const double pn = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    if (std::abs(pn - 1.0) > 1e-9) throw std::invalid_argument("jeffery_rate: p must be a unit vector");
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (std::abs(omega[i][j] + omega[j][i]) > 1e-12)
                throw std::invalid_argument("jeffery_rate: rotation tensor is not antisymmetric");
            if (std::abs(strain[i][j] - strain[j][i]) > 1e-12)
                throw std::invalid_argument("jeffery_rate: strain-rate tensor is not symmetric");
        }
    }
    Vec3 op{}, sp{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            op[i] += omega[i][j] * p[j];
            sp[i] += strain[i][j] * p[j];
        }
    }
    const double psp = p[0] * sp[0] + p[1] * sp[1] + p[2] * sp[2];
    return {op[0] + sp[0] - p[0] * psp, op[1] + sp[1] - p[1] * psp, op[2] + sp[2] - p[2] * psp};
}

// --- synthetic evaluation ------------------------------------------------------

RPlane synthetic_residual(const Scene& scene, double noise_sigma, std::uint64_t noise_seed)
{
    RPlane b = add_noise(render_hologram(scene), noise_sigma, noise_seed);
    for (auto& v : b.data) v -= 1.0;
    return b;
}

std::vector<Blob> detect(const HoloOperator& op, const RPlane& b, Method method, const EvaluationSetup& setup)
{
    if (method == Method::rihvr) {
        const auto result = fista(op, b, setup.solver);
        return segment(result.volume, setup.segmentation);
    }
    return segment(baseline_reconstruct(op, b, setup.baseline_threshold), setup.baseline_segmentation);
}

std::vector<Vec3> truth_voxels(const Scene& scene)
{
    std::vector<Vec3> out;
    out.reserve(scene.particles.size());
    for (const auto& p : scene.particles) out.push_back(to_voxel(scene.geom, p.position));
    return out;
}

std::vector<Vec3> blob_centroids(const std::vector<Blob>& blobs)
{
    std::vector<Vec3> out;
    out.reserve(blobs.size());
    for (const auto& b : blobs) out.push_back(b.centroid);
    return out;
}

std::vector<SweepPoint> concentration_sweep(std::span<const double> concentrations, const EvaluationSetup& setup,
                                            Method method, int trials)
{
    if (trials < 1) throw std::invalid_argument("concentration_sweep: trials must be >= 1");
    const HoloOperator op(setup.geom, setup.solver.optics);
    std::vector<SweepPoint> out;
    for (std::size_t ci = 0; ci < concentrations.size(); ++ci) {
        const double c = concentrations[ci];
        if (!(c > 0.0)) throw std::invalid_argument("concentration_sweep: concentrations must be positive");
        SweepPoint point;
        point.concentration = c;
        const auto n = static_cast<std::size_t>(std::lround(c * static_cast<double>(setup.geom.plane_size())));
        for (int t = 0; t < trials; ++t) {
            const std::uint64_t seed = setup.seed + 1000 * ci + static_cast<std::uint64_t>(t);
            const Scene scene = generate_scene(n, setup.geom, setup.diameter, seed);
            const RPlane b = synthetic_residual(scene, setup.noise_sigma, seed ^ 0x9e3779b97f4a7c15ULL);
            const auto blobs = detect(op, b, method, setup);
            const auto truth = truth_voxels(scene);
            const auto found = blob_centroids(blobs);
            point.trial_ep.push_back(match_particles(truth, found, setup.tolerance).extraction_rate);
        }
        point.mean_ep = std::accumulate(point.trial_ep.begin(), point.trial_ep.end(), 0.0) /
                        static_cast<double>(point.trial_ep.size());
        out.push_back(std::move(point));
    }
    return out;
}

}  // namespace rihvr
