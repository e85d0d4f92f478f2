#pragma once

#include <cstdint>
#include <vector>

#include "hetsim/workload.hpp"

namespace hetsim {

// A heterogeneous training strategy for an L-block model.
//
// Three block sets, each described by a single count:
//   C = {1..c_hat}       activation checkpointing (prefix: earlier blocks
//                        save memory over a longer span for the same cost)
//   P = {1..p_hat}       FP16 parameter offloading (prefix, same argument)
//   O = {L-o_hat+1..L}   optimizer-state offloading (suffix: later blocks
//                        overlap their transfers with more compute)
//
// p_hat <= o_hat always: blocks whose optimizer stays on the GPU never hold
// persistent FP16 parameters (they are materialized from the FP32 master on
// the fly), so planning their offload is meaningless.
struct Strategy {
    int c_hat = 0;
    int p_hat = 0;
    int o_hat = 0;

    // prefetch_lookahead[i-1] is how many blocks ahead of block i's backward
    // unit its parameter prefetch is launched. Only meaningful for P-blocks;
    // 1 everywhere is the conservative default the solver assumes.
    std::vector<int> prefetch_lookahead;

    static Strategy uniform(int c_hat, int p_hat, int o_hat, int num_blocks);

    // Throws std::invalid_argument if the triple is out of range, p_hat >
    // o_hat, the lookahead vector has the wrong size, or a P-block has
    // lookahead < 1.
    void validate(int num_blocks) const;
};

struct CostEstimate {
    double t_fwd = 0.0;
    double t_bwd = 0.0;
    double t_sync = 0.0;
    int v_hat = 0;
    std::int64_t peak_gpu = 0;   // bytes
    std::int64_t cpu_bytes = 0;  // bytes
    double objective = 0.0;      // t_fwd + t_bwd
};

// Peak GPU bytes, reached at the forward/backward transition:
//
//   2*m_a_in*c_hat + 2*m_a*(L-c_hat+1) + 2*m_p*(L-p_hat+1)
//   + 12*m_p*(L-o_hat) + m_gc
//
// The two "+1" terms cover the in-flight block at the transition.
std::int64_t peak_gpu_mem(const ModelProfile& profile, const Strategy& s);

// CPU bytes: 14*m_p*o_hat + m_cc. 12 bytes/param of optimizer state plus a
// 2-byte FP16 buffer shared between parameters and gradients (they never
// coexist on the CPU).
std::int64_t cpu_mem(const ModelProfile& profile, const Strategy& s);

// Forward critical path: max(t_fp*L, t_h2d*o_hat + t_fp).
double t_fwd(const ModelProfile& profile, const Strategy& s);

// Blocks applying both checkpointing and parameter offloading. C and P are
// both prefixes, so the intersection is min(c_hat, p_hat).
int v_hat(const Strategy& s);

// Backward-phase stall waiting on parameter prefetches:
//   v_hat*max(t_h2d - t_fp - t_bp, 0) + (p_hat - v_hat)*max(t_h2d - t_bp, 0)
// A prefetch covered by a recompute+backward unit has t_fp + t_bp of
// overlap; one covered by a plain backward unit has t_bp.
double t_sync(const ModelProfile& profile, const Strategy& s);

// Backward critical path: the compute stream (with recomputation, GPU
// optimizer steps, and prefetch stalls) or the CPU workflow chain:
//   max(t_bp*L + t_fp*c_hat + t_opt_gpu*(L-o_hat) + t_sync,
//       t_bp + t_d2h + t_opt_cpu*o_hat)
double t_bwd(const ModelProfile& profile, const Strategy& s);

// Bundles all of the above. prefetch_lookahead does not influence any
// estimate; it matters only to the simulator.
CostEstimate evaluate(const ModelProfile& profile, const Strategy& s);

}  // namespace hetsim
