#include <benchmark/benchmark.h>

#include "dscat/evolution.hpp"
#include "dscat/lindblad.hpp"
#include "dscat/resolvent.hpp"
#include "dscat/resonances.hpp"
#include "fixtures.hpp"

using namespace dscat;
using namespace dscat::testing;

static void BM_EigendecomposeLattice(benchmark::State& state) {
    const DissipativeSystem s = complete_lattice(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(eigendecompose(s));
}
BENCHMARK(BM_EigendecomposeLattice)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_PropagateLattice(benchmark::State& state) {
    const DissipativeSystem s = complete_lattice(256);
    const Propagator prop(s);
    Rng rng(1);
    const Vec u = random_unit(256, rng);
    for (auto _ : state) benchmark::DoNotOptimize(prop.apply(u, 10.0));
}
BENCHMARK(BM_PropagateLattice)->Unit(benchmark::kMicrosecond);

static void BM_SandwichedNormLattice(benchmark::State& state) {
    const DissipativeSystem s = complete_lattice(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(sandwiched_norm(s, 1.0, 0.01));
}
BENCHMARK(BM_SandwichedNormLattice)->Arg(512)->Arg(4096)->Unit(benchmark::kMicrosecond);

static void BM_SandwichedNormRadial(benchmark::State& state) {
    const RadialSystem rs = build_radial_model(square_well(-1.0, 0.5, 1.0));
    for (auto _ : state) benchmark::DoNotOptimize(sandwiched_norm(rs, 1.0, 0.01));
}
BENCHMARK(BM_SandwichedNormRadial)->Unit(benchmark::kMillisecond);

static void BM_JostValue(benchmark::State& state) {
    const RadialSystem rs = build_radial_model(square_well(-4.0, 0.5, 1.0));
    for (auto _ : state) benchmark::DoNotOptimize(jost_value(rs, cplx(1.3, -0.2)));
}
BENCHMARK(BM_JostValue)->Unit(benchmark::kMicrosecond);

static void BM_LindbladApply(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    Rng rng(2);
    std::vector<Mat> jumps;
    for (int k = 0; k < 3; ++k) jumps.push_back(random_matrix(d, d, rng, 0.5));
    const LindbladSuperoperator L = build_lindbladian(random_hermitian(d, rng), jumps);
    const Mat rho = random_matrix(d, d, rng);
    for (auto _ : state) benchmark::DoNotOptimize(L.apply(rho));
}
BENCHMARK(BM_LindbladApply)->Arg(8)->Arg(32)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
