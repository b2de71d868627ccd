#include "qdlab/assumptions.hpp"
#include "qdlab/builtins.hpp"
#include "qdlab/engine.hpp"
#include "qdlab/estimators.hpp"
#include "qdlab/linalg.hpp"
#include "qdlab/oracle.hpp"

#include <benchmark/benchmark.h>

#include <numbers>

using namespace qdlab;

namespace {

void BM_SkewExp(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    Mat a = Mat::Random(n, n);
    const Mat p = a - a.transpose();
    for (auto _ : state) benchmark::DoNotOptimize(skew_exp(p, 0.3));
}
BENCHMARK(BM_SkewExp)->DenseRange(2, kMaxDim);

void BM_StepBundle(benchmark::State& state) {
    const ControlProblem p = make_builtin_problem("degenerate2d");
    const Domain d = normalize_psi(default_domain(2), p).domain;
    EngineConfig c;
    c.track = {.xi = true, .eta = true, .augmented = true, .y = true, .z = true};
    c.eps = 0.05;
    const BundleEngine engine(p, d, std::nullopt, MarkovPolicy::constant(0), c);
    const Vec x0 = Vec::Constant(2, 0.2);
    const BundleState s = engine.initial_state(x0, Vec::Unit(2, 0), Vec());
    const Vec dw = Vec::Constant(p.noise_dim(), 0.01);
    BundleState next;
    for (auto _ : state) benchmark::DoNotOptimize(step_bundle(engine, s, 1e-3, dw, next));
}
BENCHMARK(BM_StepBundle);

void BM_ValuePaths(benchmark::State& state) {
    const ControlProblem p = make_builtin_problem("ode1d");
    SimulationParams sp;
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_value(p, default_domain(1), Vec::Zero(1), MarkovPolicy::constant(0), 1000, sp));
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_ValuePaths)->Unit(benchmark::kMillisecond);

void BM_Mu(benchmark::State& state) {
    const ControlProblem q = make_builtin_problem("degenerate2d", {{"angle", std::numbers::pi / 6}});
    const Vec x = Vec::Constant(2, 0.1);
    const Vec xi = (Vec(2) << 1.0, -0.5).finished();
    for (auto _ : state) benchmark::DoNotOptimize(mu(q, x, xi));
}
BENCHMARK(BM_Mu);

void BM_Oracle2D(benchmark::State& state) {
    const ControlProblem p = make_builtin_problem("degenerate2d", {{"angle", std::numbers::pi / 6}});
    const double h = 1.0 / static_cast<double>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(solve_bellman_fd(p, default_domain(2), h));
}
BENCHMARK(BM_Oracle2D)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
