#include "hetsim/workload.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hetsim {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void ModelSpec::validate() const {
    require(num_blocks >= 1, "model: num_blocks must be >= 1");
    require(hidden_size >= 1, "model: hidden_size must be >= 1");
    require(seq_len >= 1, "model: seq_len must be >= 1");
    require(batch_size >= 1, "model: batch_size must be >= 1");
    require(vocab_size >= 1, "model: vocab_size must be >= 1");
    require(activation_coef > 1.0,
            "model: activation_coef must exceed 1 (a block's activations "
            "strictly exceed its input)");
    require(bwd_fwd_ratio > 0.0, "model: bwd_fwd_ratio must be positive");
}

void HardwareSpec::validate() const {
    // Zero capacity is accepted so an impossible budget surfaces as an
    // infeasible plan (with a shortfall report) rather than a config error.
    require(gpu_mem >= 0, "hardware: gpu_mem must be >= 0");
    require(cpu_mem >= 0, "hardware: cpu_mem must be >= 0");
    require(gpu_compute_rate > 0.0, "hardware: gpu_compute_rate must be positive");
    require(h2d_bandwidth > 0.0, "hardware: h2d_bandwidth must be positive");
    require(d2h_bandwidth > 0.0, "hardware: d2h_bandwidth must be positive");
    require(cpu_optim_rate > 0.0, "hardware: cpu_optim_rate must be positive");
    require(gpu_optim_rate > 0.0, "hardware: gpu_optim_rate must be positive");
}

std::int64_t block_param_count(std::int64_t hidden_size) {
    require(hidden_size >= 1, "block_param_count: hidden_size must be >= 1");
    return 12 * hidden_size * hidden_size + 13 * hidden_size;
}

ActivationSizes activation_sizes(const ModelSpec& spec) {
    spec.validate();
    const std::int64_t tokens = spec.batch_size * spec.seq_len;
    const std::int64_t m_a_in = tokens * spec.hidden_size;
    const auto m_a = static_cast<std::int64_t>(
        std::llround(spec.activation_coef * static_cast<double>(m_a_in)));
    return {m_a, m_a_in};
}

BlockTimes estimate_block_times(const ModelSpec& spec, const HardwareSpec& hw) {
    spec.validate();
    hw.validate();
    const double m_p = static_cast<double>(block_param_count(spec.hidden_size));
    const double b = static_cast<double>(spec.batch_size);
    const double s = static_cast<double>(spec.seq_len);
    const double h = static_cast<double>(spec.hidden_size);

    const double fwd_flops = 2.0 * m_p * b * s + 4.0 * b * s * s * h;

    BlockTimes t{};
    t.t_fp = fwd_flops / hw.gpu_compute_rate;
    t.t_bp = spec.bwd_fwd_ratio * t.t_fp;
    t.t_h2d = 2.0 * m_p / hw.h2d_bandwidth;
    t.t_d2h = 2.0 * m_p / hw.d2h_bandwidth;
    t.t_opt_cpu = m_p / hw.cpu_optim_rate;
    t.t_opt_gpu = m_p / hw.gpu_optim_rate;
    return t;
}

ModelProfile build_profile(const ModelSpec& spec, const HardwareSpec& hw,
                           const ProfileOverrides& overrides) {
    spec.validate();
    hw.validate();

    const auto acts = activation_sizes(spec);
    const auto times = estimate_block_times(spec, hw);

    ModelProfile p{};
    p.block.m_a = acts.m_a;
    p.block.m_a_in = acts.m_a_in;
    p.block.m_p = block_param_count(spec.hidden_size);
    p.block.t_fp = times.t_fp;
    p.block.t_bp = times.t_bp;
    p.block.t_h2d = times.t_h2d;
    p.block.t_d2h = times.t_d2h;
    p.block.t_opt_cpu = times.t_opt_cpu;
    p.block.t_opt_gpu = times.t_opt_gpu;
    p.num_blocks = spec.num_blocks;

    // FP16 embedding table plus the logit-side activations that never leave
    // the GPU. The embedding optimizer stays on the GPU and its compute cost
    // is ignored.
    const std::int64_t embedding_params = spec.vocab_size * spec.hidden_size;
    p.m_gc = overrides.m_gc.value_or(2 * embedding_params + 2 * acts.m_a_in);
    p.m_cc = overrides.m_cc.value_or(0);
    require(p.m_gc >= 0, "profile: m_gc must be >= 0");
    require(p.m_cc >= 0, "profile: m_cc must be >= 0");

    p.total_params = static_cast<std::int64_t>(spec.num_blocks) * p.block.m_p +
                     embedding_params;

    const double fwd_flops_block =
        2.0 * static_cast<double>(p.block.m_p) *
            static_cast<double>(spec.batch_size * spec.seq_len) +
        4.0 * static_cast<double>(spec.batch_size) *
            static_cast<double>(spec.seq_len) * static_cast<double>(spec.seq_len) *
            static_cast<double>(spec.hidden_size);
    p.flops_per_iter = 3.0 * static_cast<double>(spec.num_blocks) * fwd_flops_block;
    return p;
}

}  // namespace hetsim
