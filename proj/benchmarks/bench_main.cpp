#include <random>

#include <benchmark/benchmark.h>

#include "eitmono/eitmono.hpp"

using namespace eitmono;

namespace {

void BM_ForwardSolve(benchmark::State& state) {
    const DiskMesh mesh = build_mesh(0.1, 16, 0.0159, static_cast<int>(state.range(0)));
    const ConductivityField field = uniform_field(mesh, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(measure_full(mesh, field, 1e-3));
    state.counters["nodes"] = static_cast<double>(mesh.node_count());
}
BENCHMARK(BM_ForwardSolve)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_Sensitivity(benchmark::State& state) {
    const DiskMesh mesh = build_mesh(0.1, 16, 0.0159, 2);
    const PixelGrid grid = build_pixel_grid(mesh, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(assemble_sensitivity(mesh, grid, 1.0, 1e-3));
}
BENCHMARK(BM_Sensitivity)->Arg(12)->Arg(24)->Unit(benchmark::kMillisecond);

struct Problem {
    SensitivityTensor tensor;
    DifferenceFrame diff;
};

const Problem& problem() {
    static const Problem p = [] {
        const DiskMesh sim = build_mesh(0.1, 16, 0.0159, 3);
        const DiskMesh rec = build_mesh(0.1, 16, 0.0159, 2);
        const PixelGrid grid = build_pixel_grid(rec, 24);
        const PhantomSpec phantom{1.0, {Inclusion::disk({0.03, 0.02}, 0.015, 0.99, -1)}};
        const MeasurementFrame hom = add_noise(measure_full(sim, uniform_field(sim, 1.0), 1e-3), 1e-3, 1);
        const MeasurementFrame inhom = add_noise(measure_full(sim, realize_phantom(sim, phantom), 1e-3), 1e-3, 2);
        return Problem{assemble_sensitivity(rec, grid, 1.0, 1e-3),
                       build_difference(complete_frame(hom), complete_frame(inhom))};
    }();
    return p;
}

void BM_Constraints(benchmark::State& state) {
    const Problem& p = problem();
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_constraints(p.tensor, p.diff, 1.0, 0.99, Polarity::Resistive));
    }
}
BENCHMARK(BM_Constraints)->Unit(benchmark::kMillisecond);

void BM_SolveConstrained(benchmark::State& state) {
    const Problem& p = problem();
    const ConstraintSet cs = build_constraints(p.tensor, p.diff, 1.0, 0.99, Polarity::Resistive);
    const Eigen::MatrixXd s = vectorize(p.tensor);
    const Eigen::VectorXd v = vectorize_frame(p.diff);
    int iterations = 0;
    for (auto _ : state) {
        const ReconstructionResult r = solve_constrained(s, v, cs);
        iterations = r.iterations;
        benchmark::DoNotOptimize(r.kappa.data());
    }
    state.counters["iterations"] = iterations;
}
BENCHMARK(BM_SolveConstrained)->Unit(benchmark::kMillisecond);

void BM_Completion(benchmark::State& state) {
    const DiskMesh mesh = build_mesh(0.1, 16, 0.0159, 1);
    const MeasurementFrame f = measure_full(mesh, uniform_field(mesh, 1.0), 1e-3);
    for (auto _ : state) benchmark::DoNotOptimize(complete_frame(f));
}
BENCHMARK(BM_Completion)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
