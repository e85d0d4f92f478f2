#pragma once

#include <cstdint>
#include <iosfwd>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hetsim/costmodel.hpp"
#include "hetsim/workload.hpp"

namespace hetsim {

enum class OpKind {
    Forward,
    Backward,
    Recompute,
    GpuOptim,
    ParamPrefetch,
    GradOffload,
    CpuOptim,
};

// Execution lanes. Ops run serially within a lane, concurrently across lanes.
enum class StreamId : int {
    Compute = 1,  // Forward, Backward, Recompute, GpuOptim
    H2D = 2,      // ParamPrefetch
    D2H = 3,      // GradOffload
    Cpu = 4,      // CpuOptim
};

StreamId stream_of(OpKind kind);
const char* op_code(OpKind kind);       // short trace code, e.g. "F"
const char* stream_name(StreamId id);   // e.g. "COMPUTE"

// Identity of an op inside a simulation: (kind, block, iter) plus a flag
// separating the two parameter prefetches a block may have in one iteration
// (forward-phase copy vs backward-phase copy).
struct OpRef {
    OpKind kind;
    int block = 0;          // 1-based
    int iter = 0;           // 1-based
    bool backward_copy = false;

    friend bool operator==(const OpRef&, const OpRef&) = default;
};

struct StreamOp {
    OpKind kind;
    int block = 0;
    int iter = 0;
    bool backward_copy = false;     // ParamPrefetch only
    double duration = 0.0;          // seconds
    std::vector<OpRef> deps;        // must complete before this op starts

    // Launch gate: the op may not start before this op has *started*.
    // Used for backward parameter prefetches, which are released
    // prefetch_lookahead blocks ahead of their consumer.
    std::vector<OpRef> start_after_start_of;

    std::int64_t alloc_at_start = 0;   // bytes acquired when the op starts
    std::int64_t release_at_end = 0;   // bytes released when the op ends

    StreamId stream() const { return stream_of(kind); }
    OpRef ref() const { return {kind, block, iter, backward_copy}; }
};

// GPU memory accounting over simulated time.
struct MemoryTracker {
    std::int64_t current = 0;  // bytes
    std::int64_t peak = 0;     // bytes
    std::int64_t budget = 0;   // bytes (hardware capacity)
    std::vector<std::pair<double, std::int64_t>> timeline;  // (time, bytes)

    void record(double time, std::int64_t delta);
};

// Dynamic queues steering gradient offloads and CPU optimizer updates when
// priority scheduling is on. Earlier blocks gate the next iteration's
// forward pass, so they always dequeue first.
struct PriorityQueues {
    using MinHeap =
        std::priority_queue<int, std::vector<int>, std::greater<int>>;
    MinHeap pq_d2h;  // blocks whose gradients are computed, not yet offloaded
    MinHeap pq_opt;  // blocks whose gradients are offloaded, not yet applied
};

// allow (true) iff the allocation plus every gradient still awaiting offload
// fits in the budget; otherwise defer until an offload completion re-opens
// the question.
bool memory_guard(const MemoryTracker& tracker, std::int64_t alloc_bytes,
                  std::int64_t pending_grad_bytes);

struct CompletedOp {
    OpKind kind;
    int block = 0;
    int iter = 0;
    bool backward_copy = false;
    StreamId stream = StreamId::Compute;
    double start = 0.0;  // seconds
    double end = 0.0;    // seconds
};

struct SimResult {
    std::vector<double> iter_times;     // wall seconds per iteration
    double steady_state_time = 0.0;     // mean of iterations 2..N
    std::int64_t peak_gpu = 0;          // bytes observed
    std::vector<CompletedOp> trace;     // completion order
    std::vector<std::pair<double, std::int64_t>> mem_timeline;
    double throughput = 0.0;            // FLOP/s, flops_per_iter / steady time
};

// An allocation exceeded the GPU budget: the plan is invalid for this
// hardware or a scheduling rule misfired. Carries the offending op.
class MemoryExceededError : public std::runtime_error {
public:
    MemoryExceededError(const std::string& what, OpRef op, double time,
                        std::int64_t attempted, std::int64_t budget);
    OpRef op() const { return op_; }
    double time() const { return time_; }
    std::int64_t attempted_bytes() const { return attempted_; }
    std::int64_t budget_bytes() const { return budget_; }

private:
    OpRef op_;
    double time_;
    std::int64_t attempted_;
    std::int64_t budget_;
};

// Emits one iteration's ops with dependencies and memory deltas.
//
// Per block i, with C = {1..c_hat}, P = {1..p_hat}, O = {L-o_hat+1..L}:
//   - O-blocks prefetch parameters before F_i (H2D); from iteration 2 on the
//     prefetch depends on the block's previous-iteration CpuOptim.
//   - P-blocks prefetch parameters again before B_i, launched
//     prefetch_lookahead[i] backward units ahead.
//   - O∩P releases the forward copy at F_i end; O\P keeps its copy through
//     the backward; P\O and plain blocks materialize FP16 weights from the
//     on-GPU FP32 master transiently during F_i (and B_i for plain blocks),
//     paying no transfer.
//   - The backward writes gradients into the block's FP16 weight buffer as
//     it consumes the weights, so the buffer survives B_i as the gradient
//     and is retired by GradOffload (O-blocks) or GpuOptim (others).
//   - C-blocks drop intermediate activations at F_i end and recompute them
//     (duration t_fp) immediately before B_i.
//   - O-blocks offload gradients after B_i (D2H) and update on the CPU;
//     other blocks update on the GPU compute stream right after B_i.
std::vector<StreamOp> build_iteration_ops(const ModelProfile& profile,
                                          const Strategy& s, int iter);

// Deterministic discrete-event simulation of n_iters training iterations
// across the four streams.
//
// Streams execute their ops in creation order when priority_sched is off.
// When on, the D2H and CPU streams dequeue pq_d2h / pq_opt instead, and the
// next iteration's ParamPrefetch and Forward ops may start as soon as their
// dependencies complete, subject to the memory guard. Parameter prefetch
// launches always pass through the guard, bounded by the strategy's planned
// footprint (parameter buffers are pre-mapped within it), so a transfer is
// never issued into memory the plan did not reserve.
//
// Throws MemoryExceededError if an allocation lands above hw.gpu_mem and
// std::logic_error on accounting underflow. n_iters >= 1; steady-state
// statistics need n_iters >= 2 to exclude the cold first iteration.
SimResult run(const ModelProfile& profile, const Strategy& s,
              const HardwareSpec& hw, int n_iters, bool priority_sched);

// Chrome trace-event format: one top-level JSON array of complete ("X")
// events with fields name, cat, ph, ts, dur, pid, tid. Times in integer
// microseconds; tid is the stream id.
void write_chrome_trace(std::ostream& out, const std::vector<CompletedOp>& trace);

// CSV with header time_us,gpu_bytes and one row per tracker transition.
void write_memory_csv(std::ostream& out,
                      const std::vector<std::pair<double, std::int64_t>>& timeline);

}  // namespace hetsim
