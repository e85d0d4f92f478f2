#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hetsim/costmodel.hpp"
#include "hetsim/planner.hpp"
#include "hetsim/workload.hpp"

namespace hetsim {

// On-disk form of a plan: the strategy, its modeled cost, and how much
// memory headroom remains. Deliberately excludes wall-clock solve time so
// identical inputs produce byte-identical files.
struct PlanDocument {
    Strategy strategy;
    CostEstimate cost;
    std::int64_t gpu_margin = 0;        // gpu_mem - peak_gpu
    std::int64_t cpu_margin = 0;        // cpu_mem - cpu_bytes
    std::int64_t feasible_count = 0;
};

void write_plan_json(std::ostream& out, const PlanDocument& doc);

// Reads either a full plan document or a bare strategy object
// {"c_hat":..,"p_hat":..,"o_hat":..,"prefetch_lookahead":[..]}.
// Validates against num_blocks. Throws std::runtime_error on malformed
// input, std::invalid_argument on invariant violations.
Strategy read_strategy_json(const std::string& path, int num_blocks);

// Reproducibility sidecar written next to every output set.
struct RunManifest {
    std::string command;                // full subcommand line, normalized
    ModelSpec model;
    HardwareSpec hardware;
    std::vector<std::string> outputs;   // paths written by the run
};

void write_manifest(std::ostream& out, const RunManifest& manifest);

}  // namespace hetsim
