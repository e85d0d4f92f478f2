#include <string>

#include "doctest.h"
#include "hetsim/config.hpp"

using namespace hetsim;

namespace {

const char* kGood = R"(# sample configuration
[model]
num_blocks = 21
hidden_size = 4096
seq_len = 1024
batch_size = 8
vocab_size = 50257

[hardware]
gpu_mem_gib = 40
cpu_mem_gib = 440
gpu_tflops = 120
h2d_gbps = 20
d2h_gbps = 20
cpu_optim_mparams_s = 200
gpu_optim_mparams_s = 20000
)";

std::string with_line(const std::string& base, const std::string& extra) {
    return base + extra + "\n";
}

}  // namespace

TEST_CASE("a complete config parses with defaults applied") {
    const RunConfig cfg = parse_config(kGood, "good.conf");
    CHECK(cfg.model.num_blocks == 21);
    CHECK(cfg.model.hidden_size == 4096);
    CHECK(cfg.model.activation_coef == 16.0);
    CHECK(cfg.model.bwd_fwd_ratio == 2.0);
    CHECK(cfg.hardware.gpu_mem == 40ll << 30);
    CHECK(cfg.hardware.cpu_mem == 440ll << 30);
    CHECK(cfg.hardware.gpu_compute_rate == 120e12);
    CHECK(cfg.hardware.h2d_bandwidth == 20e9);
    CHECK(cfg.hardware.cpu_optim_rate == 200e6);
    CHECK(!cfg.overrides.m_gc.has_value());
    CHECK(!cfg.overrides.m_cc.has_value());
}

TEST_CASE("residue overrides parse") {
    std::string text = kGood;
    text.insert(text.find("\n[hardware]"), "m_gc_bytes = 4096\nm_cc_bytes = 64\n");
    const RunConfig cfg = parse_config(text, "over.conf");
    REQUIRE(cfg.overrides.m_gc.has_value());
    CHECK(*cfg.overrides.m_gc == 4096);
    CHECK(*cfg.overrides.m_cc == 64);
}

TEST_CASE("diagnostics carry file, line, and field") {
    SUBCASE("missing required field") {
        std::string text = kGood;
        const auto pos = text.find("seq_len = 1024\n");
        text.erase(pos, std::string("seq_len = 1024\n").size());
        try {
            parse_config(text, "m.conf");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("seq_len") != std::string::npos);
            CHECK(msg.find("m.conf") != std::string::npos);
        }
    }
    SUBCASE("unknown key names its line") {
        try {
            parse_config(with_line(kGood, "bogus_field = 3"), "u.conf");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("bogus_field") != std::string::npos);
            CHECK(msg.find("u.conf:") != std::string::npos);
        }
    }
    SUBCASE("unparsable number names field and line") {
        std::string text = kGood;
        text.replace(text.find("gpu_tflops = 120"),
                     std::string("gpu_tflops = 120").size(),
                     "gpu_tflops = fast");
        try {
            parse_config(text, "n.conf");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("gpu_tflops") != std::string::npos);
            CHECK(msg.find("fast") != std::string::npos);
        }
    }
    SUBCASE("missing section") {
        try {
            parse_config("[model]\nnum_blocks = 2\nhidden_size = 64\n"
                         "seq_len = 8\nbatch_size = 1\nvocab_size = 100\n",
                         "s.conf");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("[hardware]") !=
                  std::string::npos);
        }
    }
    SUBCASE("duplicate key") {
        CHECK_THROWS_AS(
            parse_config(with_line(kGood, "gpu_tflops = 99"), "d.conf"),
            ConfigError);
    }
    SUBCASE("garbage line") {
        CHECK_THROWS_AS(parse_config(with_line(kGood, "what is this"),
                                     "g.conf"),
                        ConfigError);
    }
    SUBCASE("semantic validation failures become config errors") {
        std::string text = kGood;
        text.replace(text.find("num_blocks = 21"),
                     std::string("num_blocks = 21").size(), "num_blocks = 0");
        CHECK_THROWS_AS(parse_config(text, "v.conf"), ConfigError);
    }
    SUBCASE("integer fields reject fractions") {
        std::string text = kGood;
        text.replace(text.find("batch_size = 8"),
                     std::string("batch_size = 8").size(), "batch_size = 2.5");
        CHECK_THROWS_AS(parse_config(text, "f.conf"), ConfigError);
    }
}

TEST_CASE("fractional GiB budgets land on exact byte counts") {
    std::string text = kGood;
    text.replace(text.find("gpu_mem_gib = 40"),
                 std::string("gpu_mem_gib = 40").size(), "gpu_mem_gib = 12.5");
    const RunConfig cfg = parse_config(text, "frac.conf");
    CHECK(cfg.hardware.gpu_mem == (12ll << 30) + (1ll << 29));
}

TEST_CASE("missing file") {
    CHECK_THROWS_AS(load_config("/nonexistent/path.conf"), ConfigError);
}
