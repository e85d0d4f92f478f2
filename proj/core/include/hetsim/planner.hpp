#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hetsim/costmodel.hpp"
#include "hetsim/workload.hpp"

namespace hetsim {

// Ordering applied among strategies with equal objective. least_offload
// prefers smaller o_hat, then smaller p_hat, then smaller c_hat: among
// equal-time plans, the one least dependent on the CPU and on recomputation.
enum class TieBreak {
    least_offload,
};

struct PlanRequest {
    ModelProfile profile;
    HardwareSpec hardware;
    TieBreak tie_break = TieBreak::least_offload;
};

struct PlanResult {
    Strategy strategy;
    CostEstimate cost;
    std::int64_t feasible_count = 0;  // feasible triples examined
    double solve_time = 0.0;          // seconds
};

// No (c_hat, p_hat, o_hat) satisfies both memory constraints.
class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(std::int64_t gpu_shortfall, std::int64_t cpu_shortfall,
                    std::int64_t gpu_shortfall_at_cpu_cap);

    // GPU bytes missing at the minimum-memory strategy (L, L, L).
    std::int64_t gpu_shortfall_bytes() const { return gpu_shortfall_; }
    // CPU bytes missing for the constant residue alone (o_hat = 0).
    std::int64_t cpu_shortfall_bytes() const { return cpu_shortfall_; }
    // GPU bytes missing at the most offloaded strategy the CPU can hold.
    std::int64_t gpu_shortfall_at_cpu_cap_bytes() const { return gpu_at_cap_; }

private:
    std::int64_t gpu_shortfall_;
    std::int64_t cpu_shortfall_;
    std::int64_t gpu_at_cap_;
};

// Exhaustive search over all (c_hat, p_hat, o_hat) in {0..L}^3 with
// p_hat <= o_hat, filtered by the GPU and CPU memory constraints, minimizing
// t_fwd + t_bwd. Three bounded integer variables make enumeration exact and
// O(L^3); no external solver is involved. Deterministic: ties are broken by
// the request's TieBreak rule, so the result is independent of evaluation
// order. Throws InfeasibleError when the feasible set is empty.
PlanResult solve(const PlanRequest& req);

// Greedy prefetch advancement. Iterating P-blocks in backward order, bump
// prefetch_lookahead[i] while a dry run of the simulator confirms the peak
// stays within hw.gpu_mem and the steady-state time does not regress.
// Lookaheads never drop below 1; no-op when there is no memory slack.
Strategy fine_tune_prefetch(const ModelProfile& profile, const Strategy& s,
                            const HardwareSpec& hw);

// Named static strategies used as comparison baselines:
//   "zero-offload"  p_hat = 0, o_hat = L; c_hat picked from {0, L},
//                   feasible first, then faster
//   "full-offload"  (L, L, L)
//   "all-gpu"       (0, 0, 0)
std::vector<std::pair<std::string, Strategy>> baseline_presets(
    const ModelProfile& profile, const HardwareSpec& hw);

}  // namespace hetsim
