#include "rihvr/solver.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace rihvr {

void SolverConfig::validate() const
{
    weights.validate();
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (tv_inner_iters < 1) throw std::invalid_argument("tv_inner_iters must be >= 1");
    if (step < 0.0) throw std::invalid_argument("step must be positive (or 0 to estimate)");
    if (step_policy == StepPolicy::backtracking && !(shrink > 0.0 && shrink < 1.0))
        throw std::invalid_argument("shrink factor must be in (0, 1)");
    if (power_iters < 1) throw std::invalid_argument("power_iters must be >= 1");
    if (stop_tol < 0.0) throw std::invalid_argument("stop_tol must be >= 0");
    if (max_concurrent_planes < 0) throw std::invalid_argument("max_concurrent_planes must be >= 0");
}

namespace {

double residual_norm2(const RPlane& hx, const RPlane& b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double d = hx.data[i] - b.data[i];
        acc += d * d;
    }
    return acc;
}

RPlane combine(double a, const RPlane& x, double c, const RPlane& y)
{
    RPlane out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = a * x.data[i] + c * y.data[i];
    return out;
}

struct Candidate {
    SparseVolume x;
    double l1 = 0.0;
    double tv = 0.0;
    double grad_dot = 0.0;  // Re <grad f(y), x - y>
    double dist2 = 0.0;     // ||x - y||^2
};

struct PlaneTotals {
    double l1 = 0.0, tv = 0.0, dot = 0.0, dist2 = 0.0;
};

class ProximalPass {
public:
    ProximalPass(const HoloOperator& op, const RPlane& b, const SolverConfig& cfg) : op_(op), b_(b), cfg_(cfg)
    {
        threads_ = cfg.max_concurrent_planes > 0 ? cfg.max_concurrent_planes : omp_get_max_threads();
    }

    /// x = prox(y - step * grad f(y)); grad f(y) = 2 H*(Hy - b).
    Candidate run(const SparseVolume& y, const RPlane& hy, double step) const
    {
        const auto& g = op_.geometry();
        RPlane resid(b_.rows, b_.cols);
        for (std::size_t i = 0; i < resid.size(); ++i) resid.data[i] = 2.0 * (hy.data[i] - b_.data[i]);
        const CPlane spectrum = op_.sensor_spectrum(resid);

        Candidate out;
        out.x.geom = g;
        out.x.planes.resize(g.nz);
        std::vector<PlaneTotals> totals(g.nz);
        const double tau_l1 = cfg_.weights.lambda_l1 * step;
        const double tau_tv = cfg_.weights.lambda_tv * step;
        const bool compute_tv = cfg_.weights.lambda_tv > 0.0;

#pragma omp parallel num_threads(threads_)
        {
            CPlane grad;
            CPlane v(g.ny, g.nx);
            TvWorkspace ws;
#pragma omp for schedule(dynamic)
            for (long kk = 0; kk < static_cast<long>(g.nz); ++kk) {
                const auto k = static_cast<std::size_t>(kk);
                op_.adjoint_plane(spectrum, k, grad);
                if (cfg_.domain != ValueDomain::complex)
                    for (auto& c : grad.data) c = Complex(c.real(), 0.0);

                std::fill(v.data.begin(), v.data.end(), Complex{});
                scatter_add(y.planes[k], 1.0, v);
                for (std::size_t i = 0; i < v.size(); ++i) v.data[i] -= step * grad.data[i];

                prox_fl_inplace(v, tau_l1, tau_tv, cfg_.tv_inner_iters, ws);
                if (cfg_.domain == ValueDomain::nonnegative)
                    for (auto& c : v.data) c = Complex(std::max(c.real(), 0.0), 0.0);

                SparsePlane xk = from_dense(v);
                PlaneTotals t;
                if (xk.nnz() > 0) {
                    t.l1 = l1_norm(xk);
                    if (compute_tv) t.tv = tv_norm_2d(v);
                    // d = x - y: accumulate x everywhere, then correct on the support of y
                    for (const auto& e : xk.entries) {
                        const Complex d = e.value;
                        const Complex gi = grad.data[e.row * g.nx + e.col];
                        t.dot += gi.real() * d.real() + gi.imag() * d.imag();
                        t.dist2 += std::norm(d);
                    }
                }
                for (const auto& e : y.planes[k].entries) {
                    const std::size_t i = e.row * g.nx + e.col;
                    const Complex x_i = v.data[i];
                    const Complex d = x_i - e.value;
                    t.dot += grad.data[i].real() * (d.real() - x_i.real()) + grad.data[i].imag() * (d.imag() - x_i.imag());
                    t.dist2 += std::norm(d) - std::norm(x_i);
                }
                totals[k] = t;
                out.x.planes[k] = std::move(xk);
            }
        }
        for (const auto& t : totals) {
            out.l1 += t.l1;
            out.tv += t.tv;
            out.grad_dot += t.dot;
            out.dist2 += t.dist2;
        }
        return out;
    }

private:
    const HoloOperator& op_;
    const RPlane& b_;
    const SolverConfig& cfg_;
    int threads_ = 1;
};

}  // namespace

SolveResult fista(const HoloOperator& op, const RPlane& b, const SolverConfig& cfg)
{
    cfg.validate();
    const auto& geom = op.geometry();
    geom.require_lateral(b.rows, b.cols, "fista");
    const auto t_start = std::chrono::steady_clock::now();

    SolveResult result;
    auto& report = result.report;

    double step = cfg.step;
    if (step == 0.0) {
        const double norm2 = op.norm_squared_estimate(cfg.power_iters);
        step = norm2 > 0.0 ? 1.0 / (2.0 * norm2) : 1.0;
    }

    const ProximalPass pass(op, b, cfg);
    const auto& w = cfg.weights;

    SparseVolume x(geom);
    SparseVolume x_prev(geom);
    RPlane hx(b.rows, b.cols);
    RPlane hx_prev(b.rows, b.cols);
    const double initial = residual_norm2(hx, b);
    double objective = initial;
    double t_mom = 1.0;

    for (int it = 0; it < cfg.max_iters; ++it) {
        double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
        double beta = (t_mom - 1.0) / t_next;
        bool momentum = beta > 0.0 && !(x == x_prev);

        Candidate cand;
        RPlane h_cand;
        double obj_cand = 0.0;
        for (;;) {
            const SparseVolume y = momentum ? lincomb(1.0 + beta, x, -beta, x_prev) : x;
            const RPlane hy = momentum ? combine(1.0 + beta, hx, -beta, hx_prev) : hx;
            const double f_y = residual_norm2(hy, b);

            int tries = 0;
            for (;;) {
                cand = pass.run(y, hy, step);
                h_cand = op.forward(cand.x);
                const double f_x = residual_norm2(h_cand, b);
                obj_cand = f_x + w.lambda_l1 * cand.l1 + w.lambda_tv * cand.tv;
                if (cfg.step_policy == StepPolicy::fixed) break;
                const double bound = f_y + cand.grad_dot + cand.dist2 / (2.0 * step);
                if (f_x <= bound + 1e-12 * std::max(1.0, std::abs(f_y))) break;
                if (++tries > 60) break;
                step *= cfg.shrink;
                ++report.backtracks;
            }

            if (!cfg.restart || obj_cand <= objective) break;
            if (momentum) {
                // adaptive restart: drop the momentum and retake the step from x
                ++report.restarts;
                t_mom = 1.0;
                t_next = 0.5 * (1.0 + std::sqrt(5.0));
                beta = 0.0;
                momentum = false;
                continue;
            }
            // a plain proximal step failed to decrease (inexact TV proximal); keep x
            cand.x = x;
            h_cand = hx;
            obj_cand = objective;
            break;
        }

        const double prev_objective = objective;
        x_prev = std::move(x);
        hx_prev = std::move(hx);
        x = std::move(cand.x);
        hx = std::move(h_cand);
        objective = obj_cand;
        t_mom = t_next;

        report.objective.push_back(objective);
        report.iterations = it + 1;

        if (!std::isfinite(objective) || (initial > 0.0 && objective > 1e6 * initial)) {
            report.diverged = true;
            break;
        }
        if (cfg.stop_tol > 0.0 && prev_objective > 0.0 &&
            std::abs(prev_objective - objective) <= cfg.stop_tol * prev_objective)
            break;
    }

    report.step = step;
    report.final_sparsity = sparsity(x);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    result.volume = std::move(x);
    return result;
}

SolveResult fista(const RPlane& b, const VolumeGeometry& geom, const SolverConfig& cfg)
{
    const HoloOperator op(geom, cfg.optics);
    return fista(op, b, cfg);
}

SparseVolume baseline_reconstruct(const HoloOperator& op, const RPlane& b, double threshold)
{
    if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("baseline threshold must be in (0, 1]");
    const auto& g = op.geometry();
    g.require_lateral(b.rows, b.cols, "baseline_reconstruct");
    const CPlane spectrum = op.sensor_spectrum(b);

    const std::size_t np = g.plane_size();
    std::vector<double> best(np, -1.0);
    std::vector<std::uint32_t> best_plane(np, 0);
    std::vector<Complex> best_value(np);
    CPlane plane;
    // serial over planes: ties keep the shallower plane
    for (std::size_t k = 0; k < g.nz; ++k) {
        op.adjoint_plane(spectrum, k, plane);
        for (std::size_t i = 0; i < np; ++i) {
            const double intensity = std::norm(plane.data[i]);
            if (intensity > best[i]) {
                best[i] = intensity;
                best_plane[i] = static_cast<std::uint32_t>(k);
                best_value[i] = plane.data[i];
            }
        }
    }
    double peak = 0.0;
    for (double v : best) peak = std::max(peak, v);

    SparseVolume out(g);
    if (peak <= 0.0) return out;
    const double cut = threshold * peak;
    for (std::size_t i = 0; i < np; ++i) {
        if (best[i] <= 0.0 || best[i] < cut) continue;
        const auto row = static_cast<std::uint32_t>(i / g.nx);
        const auto col = static_cast<std::uint32_t>(i % g.nx);
        out.planes[best_plane[i]].entries.push_back({row, col, best_value[i]});
    }
    return out;
}

SparseVolume baseline_reconstruct(const RPlane& b, const VolumeGeometry& geom, double threshold)
{
    return baseline_reconstruct(HoloOperator(geom), b, threshold);
}

void write_objective_history(std::ostream& os, const SolveReport& report)
{
    os << "iteration\tobjective\n";
    const auto old = os.precision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < report.objective.size(); ++i) os << (i + 1) << '\t' << report.objective[i] << '\n';
    os.precision(old);
}

}  // namespace rihvr
