#include "hetsim/plan_io.hpp"

#include <fstream>
#include <ostream>

#include "hetsim/version.hpp"
#include "json.hpp"

namespace hetsim {

namespace {

using nlohmann::json;

json strategy_to_json(const Strategy& s) {
    return json{{"c_hat", s.c_hat},
                {"p_hat", s.p_hat},
                {"o_hat", s.o_hat},
                {"prefetch_lookahead", s.prefetch_lookahead}};
}

json model_to_json(const ModelSpec& m) {
    return json{{"num_blocks", m.num_blocks},
                {"hidden_size", m.hidden_size},
                {"seq_len", m.seq_len},
                {"batch_size", m.batch_size},
                {"vocab_size", m.vocab_size},
                {"activation_coef", m.activation_coef},
                {"bwd_fwd_ratio", m.bwd_fwd_ratio}};
}

json hardware_to_json(const HardwareSpec& h) {
    return json{{"gpu_mem_bytes", h.gpu_mem},
                {"cpu_mem_bytes", h.cpu_mem},
                {"gpu_compute_flops", h.gpu_compute_rate},
                {"h2d_bytes_s", h.h2d_bandwidth},
                {"d2h_bytes_s", h.d2h_bandwidth},
                {"cpu_optim_params_s", h.cpu_optim_rate},
                {"gpu_optim_params_s", h.gpu_optim_rate}};
}

}  // namespace

void write_plan_json(std::ostream& out, const PlanDocument& doc) {
    json j{
        {"strategy", strategy_to_json(doc.strategy)},
        {"cost",
         {{"t_fwd_s", doc.cost.t_fwd},
          {"t_bwd_s", doc.cost.t_bwd},
          {"t_sync_s", doc.cost.t_sync},
          {"v_hat", doc.cost.v_hat},
          {"peak_gpu_bytes", doc.cost.peak_gpu},
          {"cpu_bytes", doc.cost.cpu_bytes},
          {"objective_s", doc.cost.objective}}},
        {"margins",
         {{"gpu_bytes", doc.gpu_margin}, {"cpu_bytes", doc.cpu_margin}}},
        {"search", {{"feasible_count", doc.feasible_count}}},
    };
    out << j.dump(2) << "\n";
}

Strategy read_strategy_json(const std::string& path, int num_blocks) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open strategy file");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    const json& s = j.contains("strategy") ? j.at("strategy") : j;

    Strategy strategy;
    try {
        strategy.c_hat = s.at("c_hat").get<int>();
        strategy.p_hat = s.at("p_hat").get<int>();
        strategy.o_hat = s.at("o_hat").get<int>();
        if (s.contains("prefetch_lookahead"))
            strategy.prefetch_lookahead =
                s.at("prefetch_lookahead").get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    if (strategy.prefetch_lookahead.empty())
        strategy.prefetch_lookahead.assign(
            static_cast<std::size_t>(num_blocks), 1);
    strategy.validate(num_blocks);
    return strategy;
}

void write_manifest(std::ostream& out, const RunManifest& manifest) {
    json j{
        {"command", manifest.command},
        {"model", model_to_json(manifest.model)},
        {"hardware", hardware_to_json(manifest.hardware)},
        {"outputs", manifest.outputs},
        {"determinism",
         "outputs are a pure function of the configuration; no seeds, "
         "timestamps, or machine state involved"},
        {"version", kVersion},
    };
    out << j.dump(2) << "\n";
}

}  // namespace hetsim
