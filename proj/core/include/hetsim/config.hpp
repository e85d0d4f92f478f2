#pragma once

#include <stdexcept>
#include <string>

#include "hetsim/workload.hpp"

namespace hetsim {

// Problem with a config file: missing file, syntax error, unknown key,
// missing required field, or a value that fails validation. The message
// carries the file, line, and field involved.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
    ModelSpec model;
    HardwareSpec hardware;
    ProfileOverrides overrides;
};

// Key-value config with [model] and [hardware] sections. '#' starts a
// comment. Keys:
//
//   [model]    num_blocks, hidden_size, seq_len, batch_size, vocab_size,
//              activation_coef (default 16), bwd_fwd_ratio (default 2.0),
//              m_gc_bytes (optional), m_cc_bytes (optional)
//   [hardware] gpu_mem_gib, cpu_mem_gib, gpu_tflops, h2d_gbps, d2h_gbps,
//              cpu_optim_mparams_s, gpu_optim_mparams_s
//
// Fields without a listed default are required. Throws ConfigError.
RunConfig load_config(const std::string& path);

// Same parser over an in-memory string; `origin` names the source in
// diagnostics.
RunConfig parse_config(const std::string& text, const std::string& origin);

}  // namespace hetsim
