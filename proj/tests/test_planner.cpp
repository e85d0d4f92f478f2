#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "hetsim/planner.hpp"
#include "hetsim/simulator.hpp"
#include "test_util.hpp"

using namespace hetsim;
using testutil::make_profile;
using testutil::set_times;

namespace {

// Reference enumerator written independently of the production formulas:
// everything inlined from first principles, candidates visited in shuffled
// order, best kept with an explicit comparator.
struct OracleResult {
    bool feasible = false;
    double objective = 0.0;
    int c = 0, p = 0, o = 0;
};

OracleResult oracle_solve(const ModelProfile& pr, const HardwareSpec& hw,
                          std::mt19937_64& rng) {
    const double L = pr.num_blocks;
    const auto& b = pr.block;

    struct Triple {
        int c, p, o;
    };
    std::vector<Triple> grid;
    for (int c = 0; c <= pr.num_blocks; ++c)
        for (int p = 0; p <= pr.num_blocks; ++p)
            for (int o = 0; o <= pr.num_blocks; ++o)
                if (p <= o) grid.push_back({c, p, o});
    std::shuffle(grid.begin(), grid.end(), rng);

    OracleResult best;
    for (const Triple t : grid) {
        const double gpu_bytes = 2.0 * b.m_a_in * t.c +
                                 2.0 * b.m_a * (L - t.c + 1) +
                                 2.0 * b.m_p * (L - t.p + 1) +
                                 12.0 * b.m_p * (L - t.o) + pr.m_gc;
        const double cpu_bytes = 14.0 * b.m_p * t.o + pr.m_cc;
        if (gpu_bytes > static_cast<double>(hw.gpu_mem)) continue;
        if (cpu_bytes > static_cast<double>(hw.cpu_mem)) continue;

        const double fwd = std::max(b.t_fp * L, b.t_h2d * t.o + b.t_fp);
        const double v = std::min(t.c, t.p);
        const double sync = v * std::max(b.t_h2d - b.t_fp - b.t_bp, 0.0) +
                            (t.p - v) * std::max(b.t_h2d - b.t_bp, 0.0);
        const double bwd =
            std::max(b.t_bp * L + b.t_fp * t.c + b.t_opt_gpu * (L - t.o) + sync,
                     b.t_bp + b.t_d2h + b.t_opt_cpu * t.o);
        const double objective = fwd + bwd;

        const bool wins =
            !best.feasible || objective < best.objective ||
            (objective == best.objective &&
             std::make_tuple(t.o, t.p, t.c) <
                 std::make_tuple(best.o, best.p, best.c));
        if (wins) {
            best.feasible = true;
            best.objective = objective;
            best.c = t.c;
            best.p = t.p;
            best.o = t.o;
        }
    }
    return best;
}

PlanRequest request_for(const ModelProfile& pr, const HardwareSpec& hw) {
    PlanRequest req;
    req.profile = pr;
    req.hardware = hw;
    return req;
}

}  // namespace

TEST_CASE("solve agrees with an independent shuffled enumerator") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const auto c = testutil::random_case(rng, 8);
        const ModelProfile pr = build_profile(c.model, c.hw);
        const OracleResult expect = oracle_solve(pr, c.hw, rng);

        if (!expect.feasible) {
            CHECK_THROWS_AS(solve(request_for(pr, c.hw)), InfeasibleError);
            continue;
        }
        const PlanResult got = solve(request_for(pr, c.hw));
        CHECK(got.cost.objective == expect.objective);
        CHECK(got.strategy.c_hat == expect.c);
        CHECK(got.strategy.p_hat == expect.p);
        CHECK(got.strategy.o_hat == expect.o);
    }
}

TEST_CASE("free GPU optimizer and ample memory keep everything on the GPU") {
    ModelProfile p = make_profile(6, 500, 100, 40, 10);
    set_times(p, 2.0, 4.0, 1.0, 1.0, 3.0, 0.0);
    HardwareSpec hw;
    hw.gpu_mem = 1ll << 40;
    hw.cpu_mem = 1ll << 40;
    hw.gpu_compute_rate = hw.h2d_bandwidth = hw.d2h_bandwidth = 1.0;
    hw.cpu_optim_rate = hw.gpu_optim_rate = 1.0;

    const PlanResult r = solve(request_for(p, hw));
    CHECK(r.strategy.c_hat == 0);
    CHECK(r.strategy.p_hat == 0);
    CHECK(r.strategy.o_hat == 0);
    CHECK(r.feasible_count > 0);
}

TEST_CASE("infeasible requests report the shortfall") {
    ModelProfile p = make_profile(4, 500, 100, 40, 10);
    set_times(p, 1, 2, 1, 1, 1, 1);
    HardwareSpec hw;
    hw.gpu_compute_rate = hw.h2d_bandwidth = hw.d2h_bandwidth = 1.0;
    hw.cpu_optim_rate = hw.gpu_optim_rate = 1.0;
    hw.cpu_mem = 1ll << 40;

    SUBCASE("GPU too small even fully offloaded") {
        const auto min_need =
            peak_gpu_mem(p, Strategy::uniform(4, 4, 4, 4));
        hw.gpu_mem = min_need - 1;
        try {
            solve(request_for(p, hw));
            FAIL("expected InfeasibleError");
        } catch (const InfeasibleError& e) {
            CHECK(e.gpu_shortfall_bytes() == 1);
            CHECK(e.cpu_shortfall_bytes() == 0);
        }
        hw.gpu_mem = 0;
        try {
            solve(request_for(p, hw));
            FAIL("expected InfeasibleError");
        } catch (const InfeasibleError& e) {
            CHECK(e.gpu_shortfall_bytes() == min_need);
        }
    }
    SUBCASE("CPU capacity limits how much offloading the GPU can buy") {
        hw.gpu_mem = peak_gpu_mem(p, Strategy::uniform(4, 2, 2, 4)) - 1;
        hw.cpu_mem = cpu_mem(p, Strategy::uniform(0, 0, 2, 4));  // o_hat <= 2
        CHECK_THROWS_AS(solve(request_for(p, hw)), InfeasibleError);
        try {
            solve(request_for(p, hw));
        } catch (const InfeasibleError& e) {
            CHECK(e.gpu_shortfall_at_cpu_cap_bytes() == 1);
        }
    }
}

TEST_CASE("shrinking the GPU budget never improves the objective") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const auto c = testutil::random_case(rng, 8);
        const ModelProfile pr = build_profile(c.model, c.hw);
        HardwareSpec hw = c.hw;
        double prev = -1.0;
        for (std::int64_t budget = hw.gpu_mem;;
             budget -= std::max<std::int64_t>(1, hw.gpu_mem / 7)) {
            hw.gpu_mem = budget;
            try {
                const PlanResult r = solve(request_for(pr, hw));
                if (prev >= 0.0) CHECK(r.cost.objective >= prev);
                // Walking DOWN from the base budget: each later solve must
                // be no better than the earlier, larger-budget one.
                prev = std::max(prev, r.cost.objective);
            } catch (const InfeasibleError&) {
                break;
            }
            if (budget <= 0) break;
        }
    }
}

TEST_CASE("solve is deterministic") {
    std::mt19937_64 rng(5);
    const auto c = testutil::random_case(rng, 12);
    const ModelProfile pr = build_profile(c.model, c.hw);
    const PlanResult a = solve(request_for(pr, c.hw));
    const PlanResult b = solve(request_for(pr, c.hw));
    CHECK(a.strategy.c_hat == b.strategy.c_hat);
    CHECK(a.strategy.p_hat == b.strategy.p_hat);
    CHECK(a.strategy.o_hat == b.strategy.o_hat);
    CHECK(a.cost.objective == b.cost.objective);
    CHECK(a.feasible_count == b.feasible_count);
}

TEST_CASE("fine_tune_prefetch with a saturated transfer lane") {
    // Both blocks prefetch and the H2D lane never idles, so no amount of
    // lookahead can move a transfer: the schedule is left untouched at any
    // budget.
    ModelProfile p = make_profile(2, 1000, 200, 50, 0);
    set_times(p, 2.0, 4.0, 6.0, 3.0, 5.0, 0.0);
    const Strategy base = Strategy::uniform(0, 2, 2, 2);

    HardwareSpec hw;
    hw.gpu_compute_rate = hw.h2d_bandwidth = hw.d2h_bandwidth = 1.0;
    hw.cpu_optim_rate = hw.gpu_optim_rate = 1.0;
    hw.cpu_mem = 1ll << 40;

    for (const std::int64_t budget :
         {peak_gpu_mem(p, base), peak_gpu_mem(p, base) + 10 * p.block.m_p}) {
        hw.gpu_mem = budget;
        const Strategy tuned = fine_tune_prefetch(p, base, hw);
        for (int la : tuned.prefetch_lookahead) CHECK(la == 1);
    }
}

TEST_CASE("fine_tune_prefetch with an idle transfer lane") {
    // One parameter-offloaded block whose prefetch stalls the backward; the
    // H2D lane idles beforehand, so advancing the launch genuinely helps.
    // The CPU side is fast so the compute path stays critical.
    ModelProfile p = make_profile(4, 1000, 200, 50, 0);
    set_times(p, 2.0, 4.0, 9.0, 0.5, 0.5, 0.0);
    const Strategy base = Strategy::uniform(0, 1, 4, 4);

    HardwareSpec hw;
    hw.gpu_compute_rate = hw.h2d_bandwidth = hw.d2h_bandwidth = 1.0;
    hw.cpu_optim_rate = hw.gpu_optim_rate = 1.0;
    hw.cpu_mem = 1ll << 40;
    hw.gpu_mem = peak_gpu_mem(p, base);

    const SimResult baseline = run(p, base, hw, 2, false);

    SUBCASE("zero slack admits only peak-neutral advances") {
        hw.gpu_mem = baseline.peak_gpu;
        const Strategy tuned = fine_tune_prefetch(p, base, hw);
        CHECK(tuned.prefetch_lookahead[0] == 2);
        const SimResult after = run(p, tuned, hw, 2, false);
        CHECK(after.peak_gpu == baseline.peak_gpu);
        CHECK(after.steady_state_time < baseline.steady_state_time);
    }
    SUBCASE("one spare parameter buffer admits exactly one more in-flight "
            "prefetch") {
        hw.gpu_mem = baseline.peak_gpu + 2 * p.block.m_p;
        const Strategy tuned = fine_tune_prefetch(p, base, hw);
        CHECK(tuned.prefetch_lookahead[0] == 3);
        const SimResult after = run(p, tuned, hw, 2, false);
        CHECK(after.peak_gpu == baseline.peak_gpu + 2 * p.block.m_p);

        // Extra slack beyond the one buffer buys nothing more here.
        hw.gpu_mem = baseline.peak_gpu + 20 * p.block.m_p;
        const Strategy more = fine_tune_prefetch(p, base, hw);
        CHECK(more.prefetch_lookahead == tuned.prefetch_lookahead);
    }
    SUBCASE("tuning never slows the simulated run or breaks the budget") {
        hw.gpu_mem = baseline.peak_gpu + 5 * p.block.m_p;
        const Strategy tuned = fine_tune_prefetch(p, base, hw);
        for (const bool priority : {false, true}) {
            const SimResult before = run(p, base, hw, 3, priority);
            const SimResult after = run(p, tuned, hw, 3, priority);
            CHECK(after.steady_state_time <= before.steady_state_time);
            CHECK(after.peak_gpu <= hw.gpu_mem);
        }
    }
    SUBCASE("deterministic") {
        hw.gpu_mem = baseline.peak_gpu + 2 * p.block.m_p;
        const Strategy a = fine_tune_prefetch(p, base, hw);
        const Strategy b = fine_tune_prefetch(p, base, hw);
        CHECK(a.prefetch_lookahead == b.prefetch_lookahead);
    }
}

TEST_CASE("baseline presets") {
    ModelProfile p = make_profile(5, 400, 100, 60, 25);
    set_times(p, 1.0, 2.0, 0.5, 0.5, 2.0, 0.1);
    HardwareSpec hw;
    hw.gpu_compute_rate = hw.h2d_bandwidth = hw.d2h_bandwidth = 1.0;
    hw.cpu_optim_rate = hw.gpu_optim_rate = 1.0;
    hw.cpu_mem = 1ll << 40;
    hw.gpu_mem = 1ll << 40;

    auto presets = baseline_presets(p, hw);
    REQUIRE(presets.size() == 3);

    const auto find = [&](const std::string& name) -> const Strategy& {
        for (const auto& [n, s] : presets)
            if (n == name) return s;
        FAIL("missing preset");
        return presets.front().second;
    };

    SUBCASE("zero-offload keeps parameters on the GPU, optimizers off") {
        const Strategy& z = find("zero-offload");
        CHECK(z.p_hat == 0);
        CHECK(z.o_hat == 5);
        // Ample memory and cheap recompute-free execution: checkpointing off
        // is feasible and faster.
        CHECK(z.c_hat == 0);
    }
    SUBCASE("zero-offload falls back to checkpointing under pressure") {
        HardwareSpec tight = hw;
        tight.gpu_mem = peak_gpu_mem(p, Strategy::uniform(5, 0, 5, 5));
        const auto tight_presets = baseline_presets(p, tight);
        CHECK(tight_presets[0].second.c_hat == 5);
    }
    SUBCASE("all-gpu peak is the no-offload footprint") {
        const Strategy& g = find("all-gpu");
        CHECK(g.c_hat == 0);
        CHECK(peak_gpu_mem(p, g) ==
              peak_gpu_mem(p, Strategy::uniform(0, 0, 0, 5)));
    }
    SUBCASE("full-offload reaches the global memory minimum") {
        const Strategy& f = find("full-offload");
        const auto fmin = peak_gpu_mem(p, f);
        for (int c = 0; c <= 5; ++c)
            for (int pp = 0; pp <= 5; ++pp)
                for (int o = pp; o <= 5; ++o)
                    CHECK(fmin <=
                          peak_gpu_mem(p, Strategy::uniform(c, pp, o, 5)));
    }
}

TEST_CASE("zero-offload works the CPU hardest when CPU steps dominate") {
    ModelProfile p = make_profile(5, 2000, 400, 60, 0);
    set_times(p, 1.0, 2.0, 0.5, 0.5, 20.0, 0.1);
    HardwareSpec hw;
    hw.gpu_compute_rate = hw.h2d_bandwidth = hw.d2h_bandwidth = 1.0;
    hw.cpu_optim_rate = hw.gpu_optim_rate = 1.0;
    hw.cpu_mem = 1ll << 40;
    hw.gpu_mem = 1ll << 40;

    const auto cpu_busy = [&](const Strategy& s) {
        const SimResult r = run(p, s, hw, 3, true);
        double busy = 0.0;
        for (const auto& op : r.trace)
            if (op.stream == StreamId::Cpu) busy += op.end - op.start;
        return busy;
    };

    const auto presets = baseline_presets(p, hw);
    double zero_busy = -1.0;
    std::vector<double> other_busy;
    for (const auto& [name, s] : presets) {
        const double busy = cpu_busy(s);
        if (name == "zero-offload")
            zero_busy = busy;
        else
            other_busy.push_back(busy);
    }
    REQUIRE(zero_busy >= 0.0);
    for (double busy : other_busy) CHECK(zero_busy >= busy);
    CHECK(zero_busy > 0.0);
}

TEST_CASE("solve stays fast at moderate depth") {
    ModelProfile p = make_profile(64, 4000, 1000, 500, 100);
    set_times(p, 1.0, 2.0, 0.5, 0.5, 2.0, 0.1);
    HardwareSpec hw;
    hw.gpu_compute_rate = hw.h2d_bandwidth = hw.d2h_bandwidth = 1.0;
    hw.cpu_optim_rate = hw.gpu_optim_rate = 1.0;
    hw.cpu_mem = 1ll << 40;
    hw.gpu_mem = 1ll << 40;
    const PlanResult r = solve(request_for(p, hw));
    CHECK(r.solve_time < 1.0);
}
