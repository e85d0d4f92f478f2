#include "hetsim/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <tuple>

namespace hetsim {

StreamId stream_of(OpKind kind) {
    switch (kind) {
        case OpKind::Forward:
        case OpKind::Backward:
        case OpKind::Recompute:
        case OpKind::GpuOptim:
            return StreamId::Compute;
        case OpKind::ParamPrefetch:
            return StreamId::H2D;
        case OpKind::GradOffload:
            return StreamId::D2H;
        case OpKind::CpuOptim:
            return StreamId::Cpu;
    }
    return StreamId::Compute;
}

const char* op_code(OpKind kind) {
    switch (kind) {
        case OpKind::Forward: return "F";
        case OpKind::Backward: return "B";
        case OpKind::Recompute: return "R";
        case OpKind::GpuOptim: return "OPT";
        case OpKind::ParamPrefetch: return "PF";
        case OpKind::GradOffload: return "GO";
        case OpKind::CpuOptim: return "CPU";
    }
    return "?";
}

const char* stream_name(StreamId id) {
    switch (id) {
        case StreamId::Compute: return "COMPUTE";
        case StreamId::H2D: return "H2D";
        case StreamId::D2H: return "D2H";
        case StreamId::Cpu: return "CPU";
    }
    return "?";
}

void MemoryTracker::record(double time, std::int64_t delta) {
    current += delta;
    peak = std::max(peak, current);
    timeline.emplace_back(time, current);
}

bool memory_guard(const MemoryTracker& tracker, std::int64_t alloc_bytes,
                  std::int64_t pending_grad_bytes) {
    return tracker.current + alloc_bytes + pending_grad_bytes <= tracker.budget;
}

MemoryExceededError::MemoryExceededError(const std::string& what, OpRef op,
                                         double time, std::int64_t attempted,
                                         std::int64_t budget)
    : std::runtime_error(what),
      op_(op),
      time_(time),
      attempted_(attempted),
      budget_(budget) {}

namespace {

struct BlockSets {
    int L;
    int c_hat, p_hat, o_hat;
    bool in_c(int i) const { return i <= c_hat; }
    bool in_p(int i) const { return i <= p_hat; }
    bool in_o(int i) const { return i > L - o_hat; }
};

// Effective lookahead: at least 1, and capped where the launch point
// saturates at the start of the backward phase.
int effective_lookahead(const Strategy& s, int block, int L) {
    const int raw = s.prefetch_lookahead[static_cast<std::size_t>(block - 1)];
    return std::clamp(raw, 1, std::max(1, L - block + 1));
}

}  // namespace

std::vector<StreamOp> build_iteration_ops(const ModelProfile& profile,
                                          const Strategy& s, int iter) {
    s.validate(profile.num_blocks);
    const int L = profile.num_blocks;
    const BlockSets sets{L, s.c_hat, s.p_hat, s.o_hat};
    const BlockProfile& b = profile.block;

    const std::int64_t act_bytes = 2 * b.m_a;
    const std::int64_t act_keep = 2 * b.m_a_in;          // checkpoint residue
    const std::int64_t act_drop = act_bytes - act_keep;  // recomputable part
    const std::int64_t param_bytes = 2 * b.m_p;
    const std::int64_t grad_bytes = 2 * b.m_p;

    std::vector<StreamOp> ops;
    ops.reserve(static_cast<std::size_t>(L) * 7);

    // Forward phase.
    for (int i = 1; i <= L; ++i) {
        const bool o = sets.in_o(i);
        const bool p = sets.in_p(i);
        const bool c = sets.in_c(i);

        if (o) {
            StreamOp pf;
            pf.kind = OpKind::ParamPrefetch;
            pf.block = i;
            pf.iter = iter;
            pf.duration = b.t_h2d;
            pf.alloc_at_start = param_bytes;
            if (iter > 1)
                pf.deps.push_back({OpKind::CpuOptim, i, iter - 1, false});
            ops.push_back(pf);
        }

        StreamOp f;
        f.kind = OpKind::Forward;
        f.block = i;
        f.iter = iter;
        f.duration = b.t_fp;
        if (i > 1) f.deps.push_back({OpKind::Forward, i - 1, iter, false});
        if (o) f.deps.push_back({OpKind::ParamPrefetch, i, iter, false});
        // Blocks with a GPU-resident optimizer materialize FP16 weights from
        // the FP32 master for the span of the op only.
        f.alloc_at_start = act_bytes + (o ? 0 : param_bytes);
        f.release_at_end = (c ? act_drop : 0) + (o ? 0 : param_bytes) +
                           (o && p ? param_bytes : 0);
        ops.push_back(f);
    }

    // Backward phase.
    for (int i = L; i >= 1; --i) {
        const bool o = sets.in_o(i);
        const bool p = sets.in_p(i);
        const bool c = sets.in_c(i);
        const bool plain = !o && !p;

        if (p) {
            StreamOp pf;
            pf.kind = OpKind::ParamPrefetch;
            pf.block = i;
            pf.iter = iter;
            pf.backward_copy = true;
            pf.duration = b.t_h2d;
            pf.alloc_at_start = param_bytes;
            const int m = i + effective_lookahead(s, i, L);
            if (m > L) {
                // Launch when the backward phase begins.
                pf.deps.push_back({OpKind::Forward, L, iter, false});
            } else if (sets.in_c(m)) {
                pf.start_after_start_of.push_back(
                    {OpKind::Recompute, m, iter, false});
            } else {
                pf.start_after_start_of.push_back(
                    {OpKind::Backward, m, iter, false});
            }
            ops.push_back(pf);
        }

        if (c) {
            StreamOp r;
            r.kind = OpKind::Recompute;
            r.block = i;
            r.iter = iter;
            r.duration = b.t_fp;
            r.deps.push_back({OpKind::Forward, i, iter, false});
            if (i < L) r.deps.push_back({OpKind::Backward, i + 1, iter, false});
            r.alloc_at_start = act_drop;
            ops.push_back(r);
        }

        StreamOp bk;
        bk.kind = OpKind::Backward;
        bk.block = i;
        bk.iter = iter;
        bk.duration = b.t_bp;
        if (i == L)
            bk.deps.push_back({OpKind::Forward, L, iter, false});
        else
            bk.deps.push_back({OpKind::Backward, i + 1, iter, false});
        if (c) bk.deps.push_back({OpKind::Recompute, i, iter, false});
        if (p) bk.deps.push_back({OpKind::ParamPrefetch, i, iter, true});
        // Gradients take over the block's FP16 weight buffer as the backward
        // consumes it, so B itself allocates only for plain blocks (whose
        // transient weight materialization doubles as the gradient buffer).
        // The buffer is retired by GradOffload or GpuOptim, not here.
        bk.alloc_at_start = plain ? param_bytes : 0;
        bk.release_at_end = act_bytes;
        ops.push_back(bk);

        if (o) {
            StreamOp go;
            go.kind = OpKind::GradOffload;
            go.block = i;
            go.iter = iter;
            go.duration = b.t_d2h;
            go.deps.push_back({OpKind::Backward, i, iter, false});
            go.release_at_end = grad_bytes;
            ops.push_back(go);

            StreamOp co;
            co.kind = OpKind::CpuOptim;
            co.block = i;
            co.iter = iter;
            co.duration = b.t_opt_cpu;
            co.deps.push_back({OpKind::GradOffload, i, iter, false});
            ops.push_back(co);
        } else {
            StreamOp gu;
            gu.kind = OpKind::GpuOptim;
            gu.block = i;
            gu.iter = iter;
            gu.duration = b.t_opt_gpu;
            gu.deps.push_back({OpKind::Backward, i, iter, false});
            gu.release_at_end = grad_bytes;
            ops.push_back(gu);
        }
    }
    return ops;
}

namespace {

struct EngineOp {
    StreamOp spec;
    std::vector<int> dep_ids;
    std::vector<int> gate_ids;   // ops that must have started
    std::vector<int> dependents; // ops whose deps include this one
    int deps_remaining = 0;
    int gates_remaining = 0;
    bool started = false;
    bool done = false;
    double start_t = 0.0;
    double end_t = 0.0;
};

struct RefKey {
    int kind;
    int block;
    int iter;
    bool bwd;
    bool operator<(const RefKey& o) const {
        if (kind != o.kind) return kind < o.kind;
        if (block != o.block) return block < o.block;
        if (iter != o.iter) return iter < o.iter;
        return bwd < o.bwd;
    }
};

RefKey key_of(const OpRef& r) {
    return {static_cast<int>(r.kind), r.block, r.iter, r.backward_copy};
}

class Engine {
public:
    Engine(const ModelProfile& profile, const Strategy& s,
           const HardwareSpec& hw, int n_iters, bool priority_sched)
        : profile_(profile),
          strategy_(s),
          n_iters_(n_iters),
          priority_(priority_sched) {
        grad_bytes_ = 2 * profile.block.m_p;
        base_bytes_ = profile.m_gc +
                      12 * profile.block.m_p *
                          static_cast<std::int64_t>(profile.num_blocks - s.o_hat);
        tracker_.budget = hw.gpu_mem;
        // Parameter buffers are pre-mapped within the strategy's planned
        // footprint; a transfer is only issued into that envelope.
        envelope_ = std::min(hw.gpu_mem, peak_gpu_mem(profile, s));
        build_ops();
        for (std::size_t id = 0; id < ops_.size(); ++id) {
            const auto& spec = ops_[id].spec;
            if (spec.kind == OpKind::GradOffload ||
                spec.kind == OpKind::CpuOptim)
                pq_target_[{static_cast<int>(spec.kind), spec.block,
                            spec.iter}] = static_cast<int>(id);
        }
    }

    SimResult run() {
        if (base_bytes_ > tracker_.budget)
            throw MemoryExceededError(
                "constant residents (" + std::to_string(base_bytes_) +
                    " B) exceed the GPU budget (" +
                    std::to_string(tracker_.budget) + " B)",
                OpRef{OpKind::Forward, 0, 0, false}, 0.0, base_bytes_,
                tracker_.budget);
        tracker_.record(0.0, base_bytes_);

        dispatch_all(0.0);
        while (true) {
            int next = next_completion();
            if (next < 0) break;
            const double now = ops_[static_cast<std::size_t>(next)].end_t;
            complete(next, now);
            dispatch_all(now);
        }

        for (const auto& op : ops_) {
            if (!op.done)
                throw std::logic_error("simulator deadlock: op never started");
        }
        return finalize();
    }

private:
    void build_ops() {
        std::map<RefKey, int> index;
        for (int k = 1; k <= n_iters_; ++k) {
            auto iter_ops = build_iteration_ops(profile_, strategy_, k);
            for (auto& so : iter_ops) {
                EngineOp op;
                op.spec = std::move(so);
                const int id = static_cast<int>(ops_.size());
                index[key_of(op.spec.ref())] = id;
                ops_.push_back(std::move(op));
            }
        }
        for (std::size_t id = 0; id < ops_.size(); ++id) {
            auto& op = ops_[id];
            for (const auto& d : op.spec.deps) {
                const auto it = index.find(key_of(d));
                if (it == index.end())
                    throw std::logic_error("unresolved op dependency");
                op.dep_ids.push_back(it->second);
                ops_[static_cast<std::size_t>(it->second)].dependents.push_back(
                    static_cast<int>(id));
            }
            for (const auto& g : op.spec.start_after_start_of) {
                const auto it = index.find(key_of(g));
                if (it == index.end())
                    throw std::logic_error("unresolved op launch gate");
                op.gate_ids.push_back(it->second);
                gate_watchers_[it->second].push_back(static_cast<int>(id));
            }
            op.deps_remaining = static_cast<int>(op.dep_ids.size());
            op.gates_remaining = static_cast<int>(op.gate_ids.size());
            streams_[stream_index(op.spec.stream())].push_back(
                static_cast<int>(id));
            unfinished_per_iter_[op.spec.iter]++;
        }
    }

    static int stream_index(StreamId s) { return static_cast<int>(s) - 1; }

    int next_completion() const {
        int best = -1;
        for (int s = 0; s < 4; ++s) {
            const int id = running_[s];
            if (id < 0) continue;
            if (best < 0 || completes_before(id, best)) best = id;
        }
        return best;
    }

    // Tie order at equal timestamps: (stream, iter, block).
    bool completes_before(int a, int b) const {
        const auto& oa = ops_[static_cast<std::size_t>(a)];
        const auto& ob = ops_[static_cast<std::size_t>(b)];
        if (oa.end_t != ob.end_t) return oa.end_t < ob.end_t;
        if (oa.spec.stream() != ob.spec.stream())
            return oa.spec.stream() < ob.spec.stream();
        if (oa.spec.iter != ob.spec.iter) return oa.spec.iter < ob.spec.iter;
        return oa.spec.block < ob.spec.block;
    }

    int oldest_live_iter() const {
        for (int k = 1; k <= n_iters_; ++k) {
            const auto it = unfinished_per_iter_.find(k);
            if (it != unfinished_per_iter_.end() && it->second > 0) return k;
        }
        return n_iters_;
    }

    bool guards_pass(const EngineOp& op) const {
        const OpKind kind = op.spec.kind;
        // A parameter transfer is only issued into its pre-mapped envelope,
        // net of gradients still waiting to leave.
        if (kind == OpKind::ParamPrefetch) {
            if (!memory_guard(tracker_, op.spec.alloc_at_start, pending_grads_))
                return false;
            if (tracker_.current + op.spec.alloc_at_start + pending_grads_ >
                envelope_)
                return false;
        }
        // Runahead into the next iteration must not raise the peak: it only
        // proceeds through memory the run has already proven it needs.
        if (priority_ && op.spec.iter > oldest_live_iter() &&
            (kind == OpKind::ParamPrefetch || kind == OpKind::Forward)) {
            const std::int64_t bound =
                std::min({tracker_.budget, envelope_, tracker_.peak});
            if (tracker_.current + op.spec.alloc_at_start + pending_grads_ >
                bound)
                return false;
        }
        return true;
    }

    bool ready(const EngineOp& op) const {
        return !op.started && op.deps_remaining == 0 && op.gates_remaining == 0;
    }

    // Pick the op the stream would start now, or -1.
    int candidate(int stream) {
        const auto id = static_cast<StreamId>(stream + 1);
        if (priority_ && id == StreamId::D2H) return pq_front(pq_d2h_);
        if (priority_ && id == StreamId::Cpu) return pq_front(pq_opt_);
        // In-order execution: the earliest unstarted op blocks the stream.
        auto& queue = streams_[stream];
        auto& cursor = cursors_[stream];
        while (cursor < queue.size() &&
               ops_[static_cast<std::size_t>(queue[cursor])].started)
            ++cursor;
        if (cursor >= queue.size()) return -1;
        return queue[cursor];
    }

    int pq_front(std::priority_queue<std::pair<int, int>,
                 std::vector<std::pair<int, int>>,
                 std::greater<std::pair<int, int>>>& pq) const {
        if (pq.empty()) return -1;
        const auto [iter, block] = pq.top();
        const auto it = pq_ops_.find({iter, block});
        return it == pq_ops_.end() ? -1 : it->second;
    }

    void dispatch_all(double now) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (int s = 0; s < 4; ++s) {
                if (running_[s] >= 0) continue;
                const int id = candidate(s);
                if (id < 0) continue;
                auto& op = ops_[static_cast<std::size_t>(id)];
                if (!ready(op) || !guards_pass(op)) continue;
                start(id, now);
                changed = true;
            }
        }
    }

    void start(int id, double now) {
        auto& op = ops_[static_cast<std::size_t>(id)];
        op.started = true;
        op.start_t = now;
        op.end_t = now + op.spec.duration;
        running_[stream_index(op.spec.stream())] = id;

        if (priority_) {
            if (op.spec.kind == OpKind::GradOffload) pq_pop(pq_d2h_);
            if (op.spec.kind == OpKind::CpuOptim) pq_pop(pq_opt_);
        }

        if (op.spec.alloc_at_start > 0) {
            if (tracker_.current + op.spec.alloc_at_start > tracker_.budget)
                throw MemoryExceededError(
                    std::string("GPU budget exceeded starting ") +
                        op_code(op.spec.kind) + "_" +
                        std::to_string(op.spec.block) + " in iteration " +
                        std::to_string(op.spec.iter),
                    op.spec.ref(), now,
                    tracker_.current + op.spec.alloc_at_start, tracker_.budget);
            tracker_.record(now, op.spec.alloc_at_start);
        }

        const auto watchers = gate_watchers_.find(id);
        if (watchers != gate_watchers_.end())
            for (int w : watchers->second)
                ops_[static_cast<std::size_t>(w)].gates_remaining--;
    }

    void pq_pop(std::priority_queue<std::pair<int, int>,
                std::vector<std::pair<int, int>>,
                std::greater<std::pair<int, int>>>& pq) {
        pq_ops_.erase(pq.top());
        pq.pop();
    }

    void complete(int id, double now) {
        auto& op = ops_[static_cast<std::size_t>(id)];
        op.done = true;
        running_[stream_index(op.spec.stream())] = -1;

        if (op.spec.release_at_end > 0) {
            if (tracker_.current - op.spec.release_at_end < base_bytes_)
                throw std::logic_error(
                    "memory accounting underflow releasing " +
                    std::string(op_code(op.spec.kind)) + "_" +
                    std::to_string(op.spec.block));
            tracker_.record(now, -op.spec.release_at_end);
        }

        const bool is_o_block =
            op.spec.block > profile_.num_blocks - strategy_.o_hat;
        if (op.spec.kind == OpKind::Backward && is_o_block) {
            pending_grads_ += grad_bytes_;
            enqueue(pq_d2h_, OpKind::GradOffload, op.spec.block, op.spec.iter);
        }
        if (op.spec.kind == OpKind::GradOffload) {
            pending_grads_ -= grad_bytes_;
            enqueue(pq_opt_, OpKind::CpuOptim, op.spec.block, op.spec.iter);
        }

        for (int d : op.dependents)
            ops_[static_cast<std::size_t>(d)].deps_remaining--;

        unfinished_per_iter_[op.spec.iter]--;
        iter_end_[op.spec.iter] = std::max(iter_end_[op.spec.iter], now);

        trace_.push_back({op.spec.kind, op.spec.block, op.spec.iter,
                          op.spec.backward_copy, op.spec.stream(), op.start_t,
                          op.end_t});
    }

    void enqueue(std::priority_queue<std::pair<int, int>,
                 std::vector<std::pair<int, int>>,
                 std::greater<std::pair<int, int>>>& pq,
                 OpKind kind, int block, int iter) {
        if (!priority_) return;
        const auto key = std::make_pair(iter, block);
        pq.push(key);
        pq_ops_[key] = pq_target_.at({static_cast<int>(kind), block, iter});
    }

    SimResult finalize() {
        SimResult r;
        r.iter_times.resize(static_cast<std::size_t>(n_iters_));
        double prev = 0.0;
        for (int k = 1; k <= n_iters_; ++k) {
            const double end = iter_end_[k];
            r.iter_times[static_cast<std::size_t>(k - 1)] = end - prev;
            prev = end;
        }
        if (n_iters_ >= 2) {
            double sum = 0.0;
            for (int k = 2; k <= n_iters_; ++k)
                sum += r.iter_times[static_cast<std::size_t>(k - 1)];
            r.steady_state_time = sum / (n_iters_ - 1);
        } else {
            r.steady_state_time = r.iter_times.front();
        }
        r.peak_gpu = tracker_.peak;
        r.trace = std::move(trace_);
        r.mem_timeline = std::move(tracker_.timeline);
        r.throughput = profile_.flops_per_iter / r.steady_state_time;
        return r;
    }

private:
    const ModelProfile& profile_;
    const Strategy& strategy_;
    int n_iters_;
    bool priority_;

    std::vector<EngineOp> ops_;
    std::array<std::vector<int>, 4> streams_{};
    std::array<std::size_t, 4> cursors_{};
    std::array<int, 4> running_{-1, -1, -1, -1};
    std::map<int, std::vector<int>> gate_watchers_;
    std::map<int, int> unfinished_per_iter_;
    std::map<int, double> iter_end_;

    std::priority_queue<std::pair<int, int>, std::vector<std::pair<int, int>>,
                        std::greater<std::pair<int, int>>>
        pq_d2h_, pq_opt_;
    std::map<std::pair<int, int>, int> pq_ops_;
    std::map<std::tuple<int, int, int>, int> pq_target_;

    MemoryTracker tracker_;
    std::int64_t pending_grads_ = 0;
    std::int64_t grad_bytes_ = 0;
    std::int64_t base_bytes_ = 0;
    std::int64_t envelope_ = 0;
    std::vector<CompletedOp> trace_;
};

}  // namespace

SimResult run(const ModelProfile& profile, const Strategy& s,
              const HardwareSpec& hw, int n_iters, bool priority_sched) {
    if (n_iters < 1)
        throw std::invalid_argument("run: n_iters must be >= 1");
    s.validate(profile.num_blocks);
    Engine engine(profile, s, hw, n_iters, priority_sched);
    return engine.run();
}

void write_chrome_trace(std::ostream& out,
                        const std::vector<CompletedOp>& trace) {
    out << "[";
    bool first = true;
    for (const auto& op : trace) {
        const auto ts = static_cast<long long>(std::llround(op.start * 1e6));
        const auto te = static_cast<long long>(std::llround(op.end * 1e6));
        if (!first) out << ",";
        first = false;
        out << "\n  {\"name\": \"" << op_code(op.kind) << "_" << op.block
            << "\", \"cat\": \"" << stream_name(op.stream)
            << "\", \"ph\": \"X\", \"ts\": " << ts << ", \"dur\": " << te - ts
            << ", \"pid\": 1, \"tid\": " << static_cast<int>(op.stream) << "}";
    }
    out << "\n]\n";
}

void write_memory_csv(
    std::ostream& out,
    const std::vector<std::pair<double, std::int64_t>>& timeline) {
    out << "time_us,gpu_bytes\n";
    for (const auto& [t, bytes] : timeline)
        out << static_cast<long long>(std::llround(t * 1e6)) << "," << bytes
            << "\n";
}

}  // namespace hetsim
