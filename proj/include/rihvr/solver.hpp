#pragma once

#include "rihvr/grid.hpp"
#include "rihvr/optics.hpp"
#include "rihvr/prox.hpp"
#include "rihvr/sparse_volume.hpp"

#include <iosfwd>
#include <vector>

namespace rihvr {

enum class StepPolicy { fixed, backtracking };

/// Constraint on the object field values.
enum class ValueDomain { complex, real, nonnegative };

struct SolverConfig {
    RegularizerWeights weights{0.5, 0.2};
    int max_iters = 100;
    int tv_inner_iters = 5;
    StepPolicy step_policy = StepPolicy::backtracking;
    /// Fixed step, or the starting step for backtracking. 0 means 1 / (2 |H|^2) from power iteration.
    double step = 0.0;
    double shrink = 0.5;
    int power_iters = 10;
    /// Stop when the relative objective change drops below this; 0 disables.
    double stop_tol = 0.0;
    bool restart = true;
    bool log_objective = false;
    ValueDomain domain = ValueDomain::complex;
    OperatorOptions optics;
    /// Upper bound on planes held densely at once during the gradient/proximal pass (0 = thread count).
    int max_concurrent_planes = 0;

    void validate() const;
};

struct SolveReport {
    std::vector<double> objective;  // one entry per executed iteration
    double final_sparsity = 1.0;
    int iterations = 0;
    int restarts = 0;
    int backtracks = 0;
    double step = 0.0;  // step in use at exit
    double wall_seconds = 0.0;
    bool diverged = false;
};

struct SolveResult {
    SparseVolume volume;
    SolveReport report;
};

/// FISTA on ||Hx - b||^2 + l1 * ||x||_1 + tv * sum_k TV(x_k), starting from x = 0.
/// The proximal step uses tau = lambda * step. Iterates are stored sparsely; each plane is
/// expanded densely only while its gradient step and proximal are evaluated.
SolveResult fista(const HoloOperator& op, const RPlane& b, const SolverConfig& cfg);
SolveResult fista(const RPlane& b, const VolumeGeometry& geom, const SolverConfig& cfg);

/// Global-threshold back-propagation baseline: per lateral pixel keeps the plane of peak
/// back-propagated intensity if it reaches `threshold` times the global peak.
SparseVolume baseline_reconstruct(const HoloOperator& op, const RPlane& b, double threshold);
SparseVolume baseline_reconstruct(const RPlane& b, const VolumeGeometry& geom, double threshold);

/// Two-column text table: iteration, objective.
void write_objective_history(std::ostream& os, const SolveReport& report);

}  // namespace rihvr
