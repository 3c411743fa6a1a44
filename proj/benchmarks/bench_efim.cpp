#include "locbound/bounds.hpp"
#include "locbound/experiments.hpp"
#include "locbound/network.hpp"
#include "locbound/ranging.hpp"

#include <benchmark/benchmark.h>

using namespace locbound;

namespace {

Deployment dense(std::size_t agents)
{
    return deploy_dense(1, 0, 4, agents, 20.0, AnchorLayout::set_ii, 10.0);
}

void BM_BuildEfimFromTopology(benchmark::State& state)
{
    const Topology topo = deployment_topology(dense(static_cast<std::size_t>(state.range(0))), LinkModel{});
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_efim(topo));
    }
}
BENCHMARK(BM_BuildEfimFromTopology)->RangeMultiplier(2)->Range(8, 128);

void BM_TotalEfimDirect(benchmark::State& state)
{
    const Deployment dep = dense(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(deployment_total_efim(dep, LinkModel{}));
    }
}
BENCHMARK(BM_TotalEfimDirect)->RangeMultiplier(2)->Range(8, 128);

void BM_AllAgentSpebs(benchmark::State& state)
{
    const Eigen::MatrixXd total = deployment_total_efim(dense(static_cast<std::size_t>(state.range(0))), LinkModel{});
    for (auto _ : state) {
        benchmark::DoNotOptimize(all_agent_spebs(total));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AllAgentSpebs)->RangeMultiplier(2)->Range(8, 256)->Complexity();

void BM_SchurOneAgent(benchmark::State& state)
{
    const NetworkEfim net = efim_from_deployment(dense(static_cast<std::size_t>(state.range(0))), LinkModel{});
    for (auto _ : state) {
        benchmark::DoNotOptimize(agent_efim(net, "agent0"));
    }
}
BENCHMARK(BM_SchurOneAgent)->RangeMultiplier(2)->Range(8, 128);

void BM_EfimBounds(benchmark::State& state)
{
    const Topology topo = deployment_topology(dense(static_cast<std::size_t>(state.range(0))), LinkModel{});
    const NetworkEfim net = build_efim(topo);
    for (auto _ : state) {
        benchmark::DoNotOptimize(efim_bounds(net, "agent0"));
    }
}
BENCHMARK(BM_EfimBounds)->RangeMultiplier(2)->Range(8, 64);

void BM_PsiMatrix(benchmark::State& state)
{
    const WaveformModel w = gaussian_pulse(1e-9, 5e-11);
    MultipathChannel ch;
    for (int l = 0; l < state.range(0); ++l) {
        ch.delays.push_back(l * 2e-9);  // one cluster, well conditioned
        ch.amplitudes.push_back(1.0 / (1 + l));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(rii_no_prior(w, ch));
    }
}
BENCHMARK(BM_PsiMatrix)->DenseRange(1, 8, 7);

void BM_FuseAnchor(benchmark::State& state)
{
    const EllipseForm e{4.0, 1.0, 0.3};
    double phi = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fuse_anchor(e, 2.0, phi));
        phi += 1e-3;
    }
}
BENCHMARK(BM_FuseAnchor);

}  // namespace

BENCHMARK_MAIN();
