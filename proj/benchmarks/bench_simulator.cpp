#include <benchmark/benchmark.h>

#include "hetsim/simulator.hpp"
#include "hetsim/workload.hpp"

namespace {

using namespace hetsim;

struct Scenario {
    ModelProfile profile;
    HardwareSpec hw;
    Strategy strategy;
};

Scenario full_offload(int num_blocks) {
    ModelSpec m;
    m.num_blocks = num_blocks;
    m.hidden_size = 4096;
    m.seq_len = 1024;
    m.batch_size = 8;
    m.vocab_size = 50257;
    HardwareSpec hw;
    hw.gpu_compute_rate = 120e12;
    hw.h2d_bandwidth = hw.d2h_bandwidth = 20e9;
    hw.cpu_optim_rate = 200e6;
    hw.gpu_optim_rate = 20e9;
    hw.cpu_mem = 4ll << 40;
    Scenario s{build_profile(m, hw), hw,
               Strategy::uniform(num_blocks, num_blocks, num_blocks,
                                 num_blocks)};
    s.hw.gpu_mem = peak_gpu_mem(s.profile, s.strategy) * 2;
    return s;
}

void BM_run_priority(benchmark::State& state) {
    const Scenario s = full_offload(static_cast<int>(state.range(0)));
    const int iters = 5;
    std::size_t ops = 0;
    for (auto _ : state) {
        const SimResult r = run(s.profile, s.strategy, s.hw, iters, true);
        ops = r.trace.size();
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(ops));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_run_priority)->RangeMultiplier(2)->Range(8, 64)->Complexity();

void BM_run_fifo(benchmark::State& state) {
    const Scenario s = full_offload(static_cast<int>(state.range(0)));
    const int iters = 5;
    std::size_t ops = 0;
    for (auto _ : state) {
        const SimResult r = run(s.profile, s.strategy, s.hw, iters, false);
        ops = r.trace.size();
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(ops));
}
BENCHMARK(BM_run_fifo)->Arg(16)->Arg(64);

void BM_build_iteration_ops(benchmark::State& state) {
    const Scenario s = full_offload(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_iteration_ops(s.profile, s.strategy, 1));
    }
}
BENCHMARK(BM_build_iteration_ops)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
