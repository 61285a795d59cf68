// Serial reference vs OpenMP operator. Args: lateral size, plane count, threads (OpenMP only).

#include "rihvr/optics.hpp"
#include "rihvr/sparse_volume.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>

using namespace rihvr;

namespace {

VolumeGeometry geom(const benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    return {n, n, static_cast<std::size_t>(state.range(1)), 10e-6, 10e-6, 1e-3, 632e-9};
}

// About 1% fill, the density of a typical reconstruction.
SparseVolume sample_volume(const VolumeGeometry& g)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SparseVolume v(g);
    for (auto& plane : v.planes) {
        CPlane d(g.ny, g.nx);
        for (auto& x : d.data)
            if (u(rng) < 0.01) x = {u(rng), u(rng)};
        plane = from_dense(d);
    }
    return v;
}

RPlane sample_plane(const VolumeGeometry& g)
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 1.0);
    RPlane r(g.ny, g.nx);
    for (auto& x : r.data) x = n(rng);
    return r;
}

void set_counters(benchmark::State& state, const VolumeGeometry& g)
{
    state.counters["planes/s"] =
        benchmark::Counter(static_cast<double>(g.nz * state.iterations()), benchmark::Counter::kIsRate);
}

void BM_forward_serial(benchmark::State& state)
{
    const auto g = geom(state);
    const auto x = sample_volume(g);
    for (auto _ : state) benchmark::DoNotOptimize(serial::forward(x, g));
    set_counters(state, g);
}

void BM_forward_omp(benchmark::State& state)
{
    const auto g = geom(state);
    const auto x = sample_volume(g);
    omp_set_num_threads(static_cast<int>(state.range(2)));
    const HoloOperator op(g);
    for (auto _ : state) benchmark::DoNotOptimize(op.forward(x));
    set_counters(state, g);
}

void BM_adjoint_serial(benchmark::State& state)
{
    const auto g = geom(state);
    const auto r = sample_plane(g);
    for (auto _ : state) benchmark::DoNotOptimize(serial::adjoint(r, g));
    set_counters(state, g);
}

void BM_adjoint_omp(benchmark::State& state)
{
    const auto g = geom(state);
    const auto r = sample_plane(g);
    omp_set_num_threads(static_cast<int>(state.range(2)));
    const HoloOperator op(g);
    for (auto _ : state) benchmark::DoNotOptimize(op.adjoint(r));
    set_counters(state, g);
}

void serial_sizes(benchmark::internal::Benchmark* b)
{
    b->Args({128, 32, 1})->Args({256, 64, 1})->Unit(benchmark::kMillisecond);
}

void omp_sizes(benchmark::internal::Benchmark* b)
{
    const int max_threads = omp_get_max_threads();
    for (int threads = 1; threads <= max_threads; threads *= 2) b->Args({128, 32, threads})->Args({256, 64, threads});
    b->Unit(benchmark::kMillisecond)->UseRealTime();
}

}  // namespace

BENCHMARK(BM_forward_serial)->Apply(serial_sizes);
BENCHMARK(BM_forward_omp)->Apply(omp_sizes);
BENCHMARK(BM_adjoint_serial)->Apply(serial_sizes);
BENCHMARK(BM_adjoint_omp)->Apply(omp_sizes);

BENCHMARK_MAIN();
