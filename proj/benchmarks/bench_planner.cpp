#include <benchmark/benchmark.h>

#include "hetsim/planner.hpp"
#include "hetsim/workload.hpp"

namespace {

using namespace hetsim;

PlanRequest request_for_depth(int num_blocks) {
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
    const ModelProfile profile = build_profile(m, hw);
    hw.gpu_mem = peak_gpu_mem(
        profile, Strategy::uniform(0, 0, num_blocks / 2, num_blocks));
    PlanRequest req;
    req.profile = profile;
    req.hardware = hw;
    return req;
}

void BM_solve(benchmark::State& state) {
    const PlanRequest req = request_for_depth(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve(req));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_solve)->RangeMultiplier(2)->Range(16, 128)->Complexity();

void BM_fine_tune_prefetch(benchmark::State& state) {
    const PlanRequest req = request_for_depth(static_cast<int>(state.range(0)));
    const PlanResult planned = solve(req);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            fine_tune_prefetch(req.profile, planned.strategy, req.hardware));
    }
}
BENCHMARK(BM_fine_tune_prefetch)->Arg(16)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
