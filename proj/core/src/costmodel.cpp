#include "hetsim/costmodel.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace hetsim {

Strategy Strategy::uniform(int c_hat, int p_hat, int o_hat, int num_blocks) {
    Strategy s;
    s.c_hat = c_hat;
    s.p_hat = p_hat;
    s.o_hat = o_hat;
    s.prefetch_lookahead.assign(static_cast<std::size_t>(num_blocks), 1);
    return s;
}

void Strategy::validate(int num_blocks) const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
    if (num_blocks < 1) fail("strategy: num_blocks must be >= 1");
    if (c_hat < 0 || c_hat > num_blocks) fail("strategy: c_hat out of [0, L]");
    if (p_hat < 0 || p_hat > num_blocks) fail("strategy: p_hat out of [0, L]");
    if (o_hat < 0 || o_hat > num_blocks) fail("strategy: o_hat out of [0, L]");
    if (p_hat > o_hat)
        fail("strategy: p_hat must not exceed o_hat (parameter offloading is "
             "only meaningful alongside optimizer offloading)");
    if (prefetch_lookahead.size() != static_cast<std::size_t>(num_blocks))
        fail("strategy: prefetch_lookahead must have one entry per block");
    for (int i = 1; i <= p_hat; ++i) {
        if (prefetch_lookahead[static_cast<std::size_t>(i - 1)] < 1)
            fail("strategy: prefetch_lookahead must be >= 1 for every "
                 "parameter-offloaded block");
    }
}

std::int64_t peak_gpu_mem(const ModelProfile& profile, const Strategy& s) {
    const std::int64_t L = profile.num_blocks;
    const BlockProfile& b = profile.block;
    return 2 * b.m_a_in * s.c_hat + 2 * b.m_a * (L - s.c_hat + 1) +
           2 * b.m_p * (L - s.p_hat + 1) + 12 * b.m_p * (L - s.o_hat) +
           profile.m_gc;
}

std::int64_t cpu_mem(const ModelProfile& profile, const Strategy& s) {
    return 14 * profile.block.m_p * s.o_hat + profile.m_cc;
}

double t_fwd(const ModelProfile& profile, const Strategy& s) {
    const BlockProfile& b = profile.block;
    return std::max(b.t_fp * profile.num_blocks, b.t_h2d * s.o_hat + b.t_fp);
}

int v_hat(const Strategy& s) { return std::min(s.c_hat, s.p_hat); }

double t_sync(const ModelProfile& profile, const Strategy& s) {
    const BlockProfile& b = profile.block;
    const int v = v_hat(s);
    return v * std::max(b.t_h2d - b.t_fp - b.t_bp, 0.0) +
           (s.p_hat - v) * std::max(b.t_h2d - b.t_bp, 0.0);
}

double t_bwd(const ModelProfile& profile, const Strategy& s) {
    const BlockProfile& b = profile.block;
    const int L = profile.num_blocks;
    const double gpu_arm = b.t_bp * L + b.t_fp * s.c_hat +
                           b.t_opt_gpu * (L - s.o_hat) + t_sync(profile, s);
    const double cpu_arm = b.t_bp + b.t_d2h + b.t_opt_cpu * s.o_hat;
    return std::max(gpu_arm, cpu_arm);
}

CostEstimate evaluate(const ModelProfile& profile, const Strategy& s) {
    s.validate(profile.num_blocks);
    CostEstimate e{};
    e.t_fwd = t_fwd(profile, s);
    e.t_bwd = t_bwd(profile, s);
    e.t_sync = t_sync(profile, s);
    e.v_hat = v_hat(s);
    e.peak_gpu = peak_gpu_mem(profile, s);
    e.cpu_bytes = cpu_mem(profile, s);
    e.objective = e.t_fwd + e.t_bwd;
    return e;
}

}  // namespace hetsim
