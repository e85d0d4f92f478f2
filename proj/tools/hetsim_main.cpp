#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hetsim/config.hpp"
#include "hetsim/costmodel.hpp"
#include "hetsim/plan_io.hpp"
#include "hetsim/planner.hpp"
#include "hetsim/simulator.hpp"
#include "hetsim/version.hpp"
#include "hetsim/workload.hpp"

namespace {

using namespace hetsim;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitMemoryExceeded = 4;

constexpr double kGiB = 1024.0 * 1024.0 * 1024.0;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << contents;
}

void emit_manifest(const std::string& command, const RunConfig& cfg,
                   const std::vector<std::string>& outputs) {
    if (outputs.empty()) return;
    RunManifest manifest;
    manifest.command = command;
    manifest.model = cfg.model;
    manifest.hardware = cfg.hardware;
    manifest.outputs = outputs;
    std::ostringstream buf;
    write_manifest(buf, manifest);
    write_file(outputs.front() + ".manifest.json", buf.str());
}

void print_infeasible(const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
}

// Model-size presets for `sweep --vary model`, keyed by billions of
// parameters: {num_blocks, hidden_size}.
const std::map<int, std::pair<int, int>>& model_presets() {
    static const std::map<int, std::pair<int, int>> presets = {
        {2, {42, 2048}},  {4, {21, 4096}},  {6, {32, 4096}},
        {8, {20, 6144}},  {10, {25, 6144}}, {12, {30, 6144}},
        {14, {35, 6144}}, {16, {40, 6144}}, {18, {23, 8192}},
        {20, {26, 8192}}, {22, {29, 8192}},
    };
    return presets;
}

struct PlannedRun {
    Strategy strategy;
    CostEstimate cost;
    std::int64_t feasible_count = 0;
    double solve_time = 0.0;
};

PlannedRun plan_and_tune(const RunConfig& cfg) {
    const ModelProfile profile =
        build_profile(cfg.model, cfg.hardware, cfg.overrides);
    PlanRequest req;
    req.profile = profile;
    req.hardware = cfg.hardware;
    const PlanResult result = solve(req);
    PlannedRun out;
    out.strategy = fine_tune_prefetch(profile, result.strategy, cfg.hardware);
    out.cost = result.cost;
    out.feasible_count = result.feasible_count;
    out.solve_time = result.solve_time;
    return out;
}

int cmd_plan(const std::string& config_path, const std::string& out_path) {
    const RunConfig cfg = load_config(config_path);
    PlannedRun planned;
    try {
        planned = plan_and_tune(cfg);
    } catch (const InfeasibleError& e) {
        print_infeasible(e);
        return kExitInfeasible;
    }

    PlanDocument doc;
    doc.strategy = planned.strategy;
    doc.cost = planned.cost;
    doc.gpu_margin = cfg.hardware.gpu_mem - planned.cost.peak_gpu;
    doc.cpu_margin = cfg.hardware.cpu_mem - planned.cost.cpu_bytes;
    doc.feasible_count = planned.feasible_count;

    std::ostringstream buf;
    write_plan_json(buf, doc);
    write_file(out_path, buf.str());
    emit_manifest("plan " + config_path + " --out " + out_path, cfg,
                  {out_path});

    std::cout << "plan: c_hat=" << doc.strategy.c_hat
              << " p_hat=" << doc.strategy.p_hat
              << " o_hat=" << doc.strategy.o_hat << "\n"
              << "objective: " << fmt(doc.cost.objective)
              << " s (t_fwd " << fmt(doc.cost.t_fwd) << " s, t_bwd "
              << fmt(doc.cost.t_bwd) << " s)\n"
              << "peak gpu: " << doc.cost.peak_gpu << " B ("
              << fmt(doc.cost.peak_gpu / kGiB) << " GiB), margin "
              << doc.gpu_margin << " B\n"
              << "cpu bytes: " << doc.cost.cpu_bytes << " B, margin "
              << doc.cpu_margin << " B\n"
              << "feasible triples: " << doc.feasible_count << ", solved in "
              << fmt(planned.solve_time) << " s\n"
              << "wrote " << out_path << "\n";
    return kExitOk;
}

int cmd_simulate(const std::string& config_path, int iters, bool no_priority,
                 const std::string& strategy_path, const std::string& trace_path,
                 const std::string& mem_path) {
    const RunConfig cfg = load_config(config_path);
    const ModelProfile profile =
        build_profile(cfg.model, cfg.hardware, cfg.overrides);

    Strategy strategy;
    if (strategy_path == "auto") {
        try {
            strategy = plan_and_tune(cfg).strategy;
        } catch (const InfeasibleError& e) {
            print_infeasible(e);
            return kExitInfeasible;
        }
    } else {
        strategy = read_strategy_json(strategy_path, profile.num_blocks);
        if (peak_gpu_mem(profile, strategy) > cfg.hardware.gpu_mem ||
            cpu_mem(profile, strategy) > cfg.hardware.cpu_mem) {
            std::cerr << "infeasible: strategy (" << strategy.c_hat << ", "
                      << strategy.p_hat << ", " << strategy.o_hat
                      << ") needs " << peak_gpu_mem(profile, strategy)
                      << " B GPU / " << cpu_mem(profile, strategy)
                      << " B CPU against budgets " << cfg.hardware.gpu_mem
                      << " / " << cfg.hardware.cpu_mem << " B\n";
            return kExitInfeasible;
        }
    }

    SimResult result;
    try {
        result = run(profile, strategy, cfg.hardware, iters, !no_priority);
    } catch (const MemoryExceededError& e) {
        std::cerr << "memory exceeded: " << e.what() << "\n";
        return kExitMemoryExceeded;
    }

    std::vector<std::string> outputs;
    if (!trace_path.empty()) {
        std::ostringstream buf;
        write_chrome_trace(buf, result.trace);
        write_file(trace_path, buf.str());
        outputs.push_back(trace_path);
    }
    if (!mem_path.empty()) {
        std::ostringstream buf;
        write_memory_csv(buf, result.mem_timeline);
        write_file(mem_path, buf.str());
        outputs.push_back(mem_path);
    }
    std::ostringstream cmd;
    cmd << "simulate " << config_path << " --iters " << iters
        << (no_priority ? " --no-priority" : "") << " --strategy "
        << strategy_path;
    if (!trace_path.empty()) cmd << " --trace " << trace_path;
    if (!mem_path.empty()) cmd << " --mem " << mem_path;
    emit_manifest(cmd.str(), cfg, outputs);

    std::cout << "strategy: c_hat=" << strategy.c_hat
              << " p_hat=" << strategy.p_hat << " o_hat=" << strategy.o_hat
              << (no_priority ? " (priority scheduling off)" : "") << "\n"
              << "steady-state iteration time: " << fmt(result.steady_state_time)
              << " s\n"
              << "throughput: " << fmt(result.throughput) << " FLOP/s ("
              << fmt(result.throughput / 1e12) << " TFLOPS)\n"
              << "peak gpu: " << result.peak_gpu << " B ("
              << fmt(result.peak_gpu / kGiB) << " GiB)\n";
    for (const auto& path : outputs) std::cout << "wrote " << path << "\n";
    return kExitOk;
}

struct SweepRow {
    std::string value;
    bool feasible = false;
    Strategy strategy;
    double steady = 0.0;
    double throughput = 0.0;
    std::int64_t peak = 0;
};

int cmd_sweep(const std::string& config_path, const std::string& vary,
              const std::vector<std::string>& values, const std::string& out_path,
              int iters) {
    const RunConfig base = load_config(config_path);

    std::vector<SweepRow> rows;
    for (const std::string& value : values) {
        RunConfig cfg = base;
        try {
            if (vary == "batch") {
                cfg.model.batch_size = std::stoll(value);
            } else if (vary == "gpu-mem") {
                cfg.hardware.gpu_mem =
                    static_cast<std::int64_t>(std::stod(value) * kGiB);
            } else {
                const int billions = std::stoi(value);
                const auto it = model_presets().find(billions);
                if (it == model_presets().end())
                    throw ConfigError("sweep: no model preset for '" + value +
                                      "' billion parameters");
                cfg.model.num_blocks = it->second.first;
                cfg.model.hidden_size = it->second.second;
            }
            cfg.model.validate();
            cfg.hardware.validate();
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("sweep: bad value '" + value + "' for --vary " +
                              vary + ": " + e.what());
        }

        SweepRow row;
        row.value = value;
        try {
            const PlannedRun planned = plan_and_tune(cfg);
            const SimResult sim =
                run(build_profile(cfg.model, cfg.hardware, cfg.overrides),
                    planned.strategy, cfg.hardware, iters, true);
            row.feasible = true;
            row.strategy = planned.strategy;
            row.steady = sim.steady_state_time;
            row.throughput = sim.throughput;
            row.peak = sim.peak_gpu;
        } catch (const InfeasibleError&) {
            row.feasible = false;
        }
        rows.push_back(std::move(row));
    }

    std::ostringstream csv;
    csv << "sweep_value,c_hat,p_hat,o_hat,steady_time_s,throughput_flops,"
           "peak_gpu_bytes,status\n";
    for (const auto& row : rows) {
        csv << row.value << ",";
        if (row.feasible) {
            csv << row.strategy.c_hat << "," << row.strategy.p_hat << ","
                << row.strategy.o_hat << "," << fmt(row.steady) << ","
                << fmt(row.throughput) << "," << row.peak << ",ok\n";
        } else {
            csv << ",,,,,,infeasible\n";
        }
    }
    write_file(out_path, csv.str());

    std::ostringstream cmd;
    cmd << "sweep " << config_path << " --vary " << vary << " --values ";
    for (std::size_t i = 0; i < values.size(); ++i)
        cmd << (i ? "," : "") << values[i];
    cmd << " --out " << out_path;
    emit_manifest(cmd.str(), base, {out_path});

    std::cout << "swept " << rows.size() << " values of " << vary << "; wrote "
              << out_path << "\n";
    return kExitOk;
}

int cmd_compare(const std::string& config_path, const std::string& out_path,
                int iters) {
    const RunConfig cfg = load_config(config_path);
    const ModelProfile profile =
        build_profile(cfg.model, cfg.hardware, cfg.overrides);

    std::vector<std::pair<std::string, Strategy>> entries;
    try {
        entries.emplace_back("planned", plan_and_tune(cfg).strategy);
    } catch (const InfeasibleError& e) {
        print_infeasible(e);
        return kExitInfeasible;
    }
    for (auto& [name, strategy] : baseline_presets(profile, cfg.hardware))
        entries.emplace_back(name, strategy);

    struct Row {
        std::string name;
        bool feasible;
        double steady = 0.0;
        double throughput = 0.0;
        std::int64_t peak = 0;
    };
    std::vector<Row> rows;
    for (const auto& [name, strategy] : entries) {
        Row row{name, false};
        const bool fits =
            peak_gpu_mem(profile, strategy) <= cfg.hardware.gpu_mem &&
            cpu_mem(profile, strategy) <= cfg.hardware.cpu_mem;
        if (fits) {
            try {
                const SimResult sim =
                    run(profile, strategy, cfg.hardware, iters, true);
                row.feasible = true;
                row.steady = sim.steady_state_time;
                row.throughput = sim.throughput;
                row.peak = sim.peak_gpu;
            } catch (const MemoryExceededError&) {
                row.feasible = false;
            }
        }
        rows.push_back(std::move(row));
    }

    const double planned_throughput = rows.front().throughput;
    std::ostringstream csv;
    csv << "name,feasible,steady_time_s,throughput_flops,peak_gpu_bytes,"
           "speedup_vs_name\n";
    for (const auto& row : rows) {
        csv << row.name << "," << (row.feasible ? "yes" : "no") << ",";
        if (row.feasible) {
            csv << fmt(row.steady) << "," << fmt(row.throughput) << ","
                << row.peak << "," << fmt(planned_throughput / row.throughput)
                << "\n";
        } else {
            csv << ",,,\n";
        }
    }
    write_file(out_path, csv.str());
    emit_manifest("compare " + config_path + " --out " + out_path, cfg,
                  {out_path});

    for (const auto& row : rows) {
        std::cout << row.name << ": "
                  << (row.feasible
                          ? fmt(row.throughput / 1e12) + " TFLOPS"
                          : std::string("infeasible"))
                  << "\n";
    }
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"planner and discrete-event simulator for heterogeneous "
                 "(GPU+CPU) LLM training"};
    app.set_version_flag("--version", hetsim::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string plan_out = "plan.json";
    auto* plan = app.add_subcommand(
        "plan", "solve for the optimal strategy and write it as JSON");
    plan->add_option("config", config_path, "config file")->required();
    plan->add_option("--out", plan_out, "output plan path");

    int iters = 5;
    bool no_priority = false;
    std::string strategy_path = "auto";
    std::string trace_path;
    std::string mem_path;
    auto* simulate = app.add_subcommand(
        "simulate", "simulate training and report steady-state timing");
    simulate->add_option("config", config_path, "config file")->required();
    simulate->add_option("--iters", iters, "iterations to simulate (>= 2)");
    simulate->add_flag("--no-priority", no_priority,
                       "disable priority-based scheduling");
    simulate->add_option("--strategy", strategy_path,
                         "strategy JSON file, or 'auto' to plan first");
    simulate->add_option("--trace", trace_path, "write a Chrome trace here");
    simulate->add_option("--mem", mem_path, "write the memory timeline CSV here");

    std::string vary;
    std::vector<std::string> values;
    std::string sweep_out = "sweep.csv";
    auto* sweep = app.add_subcommand(
        "sweep", "re-plan and re-simulate across a swept dimension");
    sweep->add_option("config", config_path, "config file")->required();
    sweep->add_option("--vary", vary, "dimension: batch, gpu-mem, or model")
        ->required()
        ->check(CLI::IsMember({"batch", "gpu-mem", "model"}));
    sweep->add_option("--values", values, "comma-separated sweep values")
        ->required()
        ->delimiter(',');
    sweep->add_option("--out", sweep_out, "output CSV path");

    std::string compare_out = "compare.csv";
    auto* compare = app.add_subcommand(
        "compare", "simulate the planned strategy against static presets");
    compare->add_option("config", config_path, "config file")->required();
    compare->add_option("--out", compare_out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (plan->parsed()) return cmd_plan(config_path, plan_out);
        if (simulate->parsed()) {
            if (iters < 2) {
                std::cerr << "simulate: --iters must be >= 2 (iteration 1 has "
                             "no cross-iteration overlap to measure)\n";
                return kExitConfig;
            }
            return cmd_simulate(config_path, iters, no_priority, strategy_path,
                                trace_path, mem_path);
        }
        if (sweep->parsed()) {
            if (values.size() < 2) {
                std::cerr << "sweep: need at least 2 values\n";
                return kExitConfig;
            }
            return cmd_sweep(config_path, vary, values, sweep_out, iters);
        }
        if (compare->parsed()) return cmd_compare(config_path, compare_out, iters);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
