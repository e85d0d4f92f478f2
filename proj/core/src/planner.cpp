#include "hetsim/planner.hpp"

#include <algorithm>
#include <chrono>
#include <string>

#include "hetsim/simulator.hpp"

namespace hetsim {

namespace {

std::string shortfall_message(std::int64_t gpu, std::int64_t cpu,
                              std::int64_t gpu_at_cap) {
    std::string msg = "no (c_hat, p_hat, o_hat) satisfies the memory "
                      "constraints;";
    msg += " GPU shortfall at full offload (L,L,L): " + std::to_string(gpu) +
           " B;";
    msg += " CPU shortfall for the constant residue alone: " +
           std::to_string(cpu) + " B;";
    msg += " GPU shortfall at the largest CPU-feasible offload: " +
           std::to_string(gpu_at_cap) + " B";
    return msg;
}

}  // namespace

InfeasibleError::InfeasibleError(std::int64_t gpu_shortfall,
                                 std::int64_t cpu_shortfall,
                                 std::int64_t gpu_shortfall_at_cpu_cap)
    : std::runtime_error(shortfall_message(gpu_shortfall, cpu_shortfall,
                                           gpu_shortfall_at_cpu_cap)),
      gpu_shortfall_(gpu_shortfall),
      cpu_shortfall_(cpu_shortfall),
      gpu_at_cap_(gpu_shortfall_at_cpu_cap) {}

PlanResult solve(const PlanRequest& req) {
    const auto t0 = std::chrono::steady_clock::now();
    req.hardware.validate();
    const int L = req.profile.num_blocks;

    bool found = false;
    Strategy best;
    CostEstimate best_cost{};
    std::int64_t feasible = 0;

    // (objective, o_hat, p_hat, c_hat) lexicographic: among equal-time plans
    // prefer the one least dependent on offloading and recomputation.
    const auto better = [&](const CostEstimate& cost, const Strategy& s) {
        if (!found) return true;
        if (cost.objective != best_cost.objective)
            return cost.objective < best_cost.objective;
        if (s.o_hat != best.o_hat) return s.o_hat < best.o_hat;
        if (s.p_hat != best.p_hat) return s.p_hat < best.p_hat;
        return s.c_hat < best.c_hat;
    };

    for (int o = 0; o <= L; ++o) {
        Strategy probe = Strategy::uniform(0, 0, o, L);
        if (cpu_mem(req.profile, probe) > req.hardware.cpu_mem) break;
        for (int p = 0; p <= o; ++p) {
            for (int c = 0; c <= L; ++c) {
                Strategy s = Strategy::uniform(c, p, o, L);
                if (peak_gpu_mem(req.profile, s) > req.hardware.gpu_mem)
                    continue;
                ++feasible;
                const CostEstimate cost = evaluate(req.profile, s);
                if (better(cost, s)) {
                    found = true;
                    best = std::move(s);
                    best_cost = cost;
                }
            }
        }
    }

    if (!found) {
        const Strategy min_gpu = Strategy::uniform(L, L, L, L);
        const std::int64_t gpu_short = std::max<std::int64_t>(
            0, peak_gpu_mem(req.profile, min_gpu) - req.hardware.gpu_mem);
        const std::int64_t cpu_short = std::max<std::int64_t>(
            0, req.profile.m_cc - req.hardware.cpu_mem);
        int o_cap = -1;
        for (int o = L; o >= 0; --o) {
            if (cpu_mem(req.profile, Strategy::uniform(0, 0, o, L)) <=
                req.hardware.cpu_mem) {
                o_cap = o;
                break;
            }
        }
        std::int64_t gpu_at_cap = gpu_short;
        if (o_cap >= 0) {
            const Strategy capped = Strategy::uniform(L, o_cap, o_cap, L);
            gpu_at_cap = std::max<std::int64_t>(
                0, peak_gpu_mem(req.profile, capped) - req.hardware.gpu_mem);
        }
        throw InfeasibleError(gpu_short, cpu_short, gpu_at_cap);
    }

    PlanResult result;
    result.strategy = std::move(best);
    result.cost = best_cost;
    result.feasible_count = feasible;
    result.solve_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return result;
}

Strategy fine_tune_prefetch(const ModelProfile& profile, const Strategy& s,
                            const HardwareSpec& hw) {
    s.validate(profile.num_blocks);
    const int L = profile.num_blocks;

    const auto dry_run = [&](const Strategy& candidate, bool priority,
                             double* steady, std::int64_t* peak) {
        try {
            const SimResult r = run(profile, candidate, hw, 2, priority);
            if (steady) *steady = r.steady_state_time;
            if (peak) *peak = r.peak_gpu;
            return r.peak_gpu <= hw.gpu_mem;
        } catch (const MemoryExceededError&) {
            return false;
        }
    };

    Strategy tuned = s;
    double baseline_fifo = 0.0, baseline_ps = 0.0;
    if (!dry_run(tuned, false, &baseline_fifo, nullptr)) return tuned;
    if (!dry_run(tuned, true, &baseline_ps, nullptr)) return tuned;

    // Backward order over the parameter-offloaded blocks; each extra unit of
    // lookahead moves one launch a block earlier, saturating at the start of
    // the backward phase. An increment is kept only when it fits the budget
    // and strictly shortens a simulated iteration; time-neutral increments
    // are discarded so the returned schedule stays minimal.
    for (int i = std::min(tuned.p_hat, L); i >= 1; --i) {
        const int cap = std::max(1, L - i + 1);
        while (tuned.prefetch_lookahead[static_cast<std::size_t>(i - 1)] < cap) {
            Strategy candidate = tuned;
            candidate.prefetch_lookahead[static_cast<std::size_t>(i - 1)]++;
            double fifo = 0.0, ps = 0.0;
            if (!dry_run(candidate, false, &fifo, nullptr)) break;
            if (!dry_run(candidate, true, &ps, nullptr)) break;
            if (fifo > baseline_fifo || ps > baseline_ps) break;
            if (fifo == baseline_fifo && ps == baseline_ps) break;
            tuned = std::move(candidate);
            baseline_fifo = fifo;
            baseline_ps = ps;
        }
    }
    return tuned;
}

std::vector<std::pair<std::string, Strategy>> baseline_presets(
    const ModelProfile& profile, const HardwareSpec& hw) {
    const int L = profile.num_blocks;

    // All parameters stay on the GPU, every optimizer lives on the CPU;
    // checkpointing is whichever of {off, full} fits, the faster one if both
    // do.
    Strategy zero_off = Strategy::uniform(0, 0, L, L);
    const Strategy zero_off_ckpt = Strategy::uniform(L, 0, L, L);
    const bool plain_fits =
        peak_gpu_mem(profile, zero_off) <= hw.gpu_mem &&
        cpu_mem(profile, zero_off) <= hw.cpu_mem;
    const bool ckpt_fits =
        peak_gpu_mem(profile, zero_off_ckpt) <= hw.gpu_mem &&
        cpu_mem(profile, zero_off_ckpt) <= hw.cpu_mem;
    if (plain_fits && ckpt_fits) {
        if (evaluate(profile, zero_off_ckpt).objective <
            evaluate(profile, zero_off).objective)
            zero_off = zero_off_ckpt;
    } else if (!plain_fits) {
        zero_off = zero_off_ckpt;
    }

    return {
        {"zero-offload", zero_off},
        {"full-offload", Strategy::uniform(L, L, L, L)},
        {"all-gpu", Strategy::uniform(0, 0, 0, L)},
    };
}

}  // namespace hetsim
