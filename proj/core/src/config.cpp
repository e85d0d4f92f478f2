#include "hetsim/config.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

namespace hetsim {

namespace {

constexpr double kGiB = 1024.0 * 1024.0 * 1024.0;

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

struct Entry {
    std::string value;
    int line;
};

using Section = std::map<std::string, Entry>;

struct RawConfig {
    std::map<std::string, Section> sections;
    std::string origin;
};

[[noreturn]] void fail(const RawConfig& raw, int line, const std::string& msg) {
    std::ostringstream out;
    out << raw.origin;
    if (line > 0) out << ":" << line;
    out << ": " << msg;
    throw ConfigError(out.str());
}

RawConfig tokenize(const std::string& text, const std::string& origin) {
    RawConfig raw;
    raw.origin = origin;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail(raw, lineno, "malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "model" && section != "hardware")
                fail(raw, lineno, "unknown section '" + section +
                                      "' (expected [model] or [hardware])");
            raw.sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(raw, lineno, "expected 'key = value', got '" + line + "'");
        if (section.empty())
            fail(raw, lineno, "key before any [model]/[hardware] section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            fail(raw, lineno, "empty key or value");
        auto [it, inserted] = raw.sections[section].emplace(key, Entry{value, lineno});
        if (!inserted)
            fail(raw, lineno, "duplicate key '" + key + "' in [" + section +
                                  "] (first on line " +
                                  std::to_string(it->second.line) + ")");
    }
    return raw;
}

class SectionReader {
public:
    SectionReader(const RawConfig& raw, const std::string& name)
        : raw_(raw), name_(name) {
        const auto it = raw.sections.find(name);
        if (it == raw.sections.end())
            fail(raw, 0, "missing required section [" + name + "]");
        section_ = &it->second;
    }

    double number(const std::string& key) {
        const Entry& e = require(key);
        return parse(e, key);
    }

    double number(const std::string& key, double fallback) {
        const Entry* e = find(key);
        return e ? parse(*e, key) : fallback;
    }

    std::int64_t integer(const std::string& key) {
        const Entry& e = require(key);
        const double v = parse(e, key);
        if (v != std::floor(v))
            fail(raw_, e.line, "field '" + key + "' must be an integer");
        return static_cast<std::int64_t>(v);
    }

    std::optional<std::int64_t> optional_integer(const std::string& key) {
        const Entry* e = find(key);
        if (!e) return std::nullopt;
        const double v = parse(*e, key);
        if (v != std::floor(v))
            fail(raw_, e->line, "field '" + key + "' must be an integer");
        return static_cast<std::int64_t>(v);
    }

    void finish() const {
        for (const auto& [key, entry] : *section_) {
            if (!seen_.count(key))
                fail(raw_, entry.line,
                     "unknown field '" + key + "' in [" + name_ + "]");
        }
    }

private:
    const Entry* find(const std::string& key) {
        seen_.insert(key);
        const auto it = section_->find(key);
        return it == section_->end() ? nullptr : &it->second;
    }

    const Entry& require(const std::string& key) {
        const Entry* e = find(key);
        if (!e)
            fail(raw_, 0, "missing required field '" + key + "' in [" + name_ + "]");
        return *e;
    }

    double parse(const Entry& e, const std::string& key) {
        try {
            std::size_t used = 0;
            const double v = std::stod(e.value, &used);
            if (used != e.value.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            fail(raw_, e.line,
                 "field '" + key + "': cannot parse '" + e.value + "' as a number");
        }
    }

    const RawConfig& raw_;
    std::string name_;
    const Section* section_;
    std::set<std::string> seen_;
};

std::int64_t to_bytes_gib(double gib) {
    return static_cast<std::int64_t>(std::llround(gib * kGiB));
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
    const RawConfig raw = tokenize(text, origin);
    RunConfig cfg;

    SectionReader model(raw, "model");
    cfg.model.num_blocks = static_cast<int>(model.integer("num_blocks"));
    cfg.model.hidden_size = model.integer("hidden_size");
    cfg.model.seq_len = model.integer("seq_len");
    cfg.model.batch_size = model.integer("batch_size");
    cfg.model.vocab_size = model.integer("vocab_size");
    cfg.model.activation_coef = model.number("activation_coef", 16.0);
    cfg.model.bwd_fwd_ratio = model.number("bwd_fwd_ratio", 2.0);
    cfg.overrides.m_gc = model.optional_integer("m_gc_bytes");
    cfg.overrides.m_cc = model.optional_integer("m_cc_bytes");
    model.finish();

    SectionReader hw(raw, "hardware");
    cfg.hardware.gpu_mem = to_bytes_gib(hw.number("gpu_mem_gib"));
    cfg.hardware.cpu_mem = to_bytes_gib(hw.number("cpu_mem_gib"));
    cfg.hardware.gpu_compute_rate = hw.number("gpu_tflops") * 1e12;
    cfg.hardware.h2d_bandwidth = hw.number("h2d_gbps") * 1e9;
    cfg.hardware.d2h_bandwidth = hw.number("d2h_gbps") * 1e9;
    cfg.hardware.cpu_optim_rate = hw.number("cpu_optim_mparams_s") * 1e6;
    cfg.hardware.gpu_optim_rate = hw.number("gpu_optim_mparams_s") * 1e6;
    hw.finish();

    try {
        cfg.model.validate();
        cfg.hardware.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

}  // namespace hetsim
