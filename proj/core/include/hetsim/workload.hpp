#pragma once

#include <cstdint>
#include <optional>

namespace hetsim {

// User-facing description of the transformer model being trained.
//
// Blocks are uniform: one BlockProfile describes every transformer block.
// The embedding layer is folded into the constant GPU residue (m_gc) and
// never participates in per-block planning decisions.
struct ModelSpec {
    int num_blocks = 1;             // transformer blocks (L)
    std::int64_t hidden_size = 1;   // feature dimension (h)
    std::int64_t seq_len = 1;       // tokens per sample (s)
    std::int64_t batch_size = 1;    // samples per iteration (b)
    std::int64_t vocab_size = 1;

    // Activation elements produced per token inside one block, counting the
    // block input plus intermediate tensors (attention scores, MLP
    // expansion, norms). 16 is a documented estimate; calibrate per model.
    double activation_coef = 16.0;

    // FLOP ratio of the backward pass to the forward pass. 2.0 is standard
    // accounting (grad wrt inputs + grad wrt weights).
    double bwd_fwd_ratio = 2.0;

    void validate() const;  // throws std::invalid_argument on bad fields
};

// GPU/CPU/interconnect platform description.
struct HardwareSpec {
    std::int64_t gpu_mem = 0;       // bytes
    std::int64_t cpu_mem = 0;       // bytes
    double gpu_compute_rate = 0.0;  // effective FLOP/s
    double h2d_bandwidth = 0.0;     // bytes/s, host-to-device
    double d2h_bandwidth = 0.0;     // bytes/s, device-to-host
    double cpu_optim_rate = 0.0;    // parameters/s updated by the CPU optimizer
    double gpu_optim_rate = 0.0;    // parameters/s updated by the GPU optimizer

    void validate() const;
};

// Per-block memory footprints and stream durations.
//
// m_a and m_a_in are element counts; memory formulas apply the 2 bytes/elem
// FP16 factor at the point of use. m_p is a raw parameter count (2 bytes of
// FP16 weights, 2 bytes of FP16 gradients, 12 bytes of optimizer state).
struct BlockProfile {
    std::int64_t m_a = 0;     // total activation elements of one block
    std::int64_t m_a_in = 0;  // block-input activation elements (checkpoint size)
    std::int64_t m_p = 0;     // parameter count of one block
    double t_fp = 0.0;        // forward compute seconds
    double t_bp = 0.0;        // backward compute seconds
    double t_h2d = 0.0;       // prefetch seconds for one block's FP16 params
    double t_d2h = 0.0;       // offload seconds for one block's FP16 grads/params
    double t_opt_cpu = 0.0;   // CPU optimizer step seconds for one block
    double t_opt_gpu = 0.0;   // GPU optimizer step seconds for one block
};

// Whole-model profile: uniform block plus constant residues.
struct ModelProfile {
    BlockProfile block;
    int num_blocks = 0;
    std::int64_t m_gc = 0;          // constant GPU-resident bytes outside the blocks
    std::int64_t m_cc = 0;          // constant CPU-resident bytes outside the blocks
    std::int64_t total_params = 0;  // blocks + embedding
    double flops_per_iter = 0.0;    // forward + backward FLOPs of one iteration
};

// =========================================================================
// Parameter count of one transformer block from the hidden dimension h.
//
//   Attention:  QKV projections + output projection  = 4h^2 + 4h
//   MLP:        4x expansion, two matmuls            = 8h^2 + 5h
//   LayerNorm:  two, scale + bias each               = 4h
//   Total:      12h^2 + 13h
// =========================================================================
std::int64_t block_param_count(std::int64_t hidden_size);

struct ActivationSizes {
    std::int64_t m_a;     // elements
    std::int64_t m_a_in;  // elements
};

// m_a_in = b*s*h (the block input); m_a = b*s*h*activation_coef.
ActivationSizes activation_sizes(const ModelSpec& spec);

struct BlockTimes {
    double t_fp, t_bp, t_h2d, t_d2h, t_opt_cpu, t_opt_gpu;
};

// Roofline-style duration estimates for one block.
//
//   t_fp   = (2 * m_p * b * s + 4 * b * s^2 * h) / gpu_compute_rate
//            (GEMM term + attention score/value term)
//   t_bp   = bwd_fwd_ratio * t_fp
//   t_h2d  = 2 * m_p / h2d_bandwidth      (FP16: 2 bytes/param)
//   t_d2h  = 2 * m_p / d2h_bandwidth
//   t_opt_cpu = m_p / cpu_optim_rate
//   t_opt_gpu = m_p / gpu_optim_rate
BlockTimes estimate_block_times(const ModelSpec& spec, const HardwareSpec& hw);

// Optional replacements for the derived constant residues.
struct ProfileOverrides {
    std::optional<std::int64_t> m_gc;  // bytes
    std::optional<std::int64_t> m_cc;  // bytes
};

// Composes the estimators above into a ModelProfile.
//
// Defaults: m_gc = 2*vocab*h (FP16 embedding) + 2*b*s*h (logit-side residue)
// bytes; m_cc = 0; total_params = L*m_p + vocab*h; flops_per_iter = 3x the
// forward FLOPs (forward + 2x backward). Throws std::invalid_argument if
// either spec violates its invariants.
ModelProfile build_profile(const ModelSpec& spec, const HardwareSpec& hw,
                           const ProfileOverrides& overrides = {});

}  // namespace hetsim
