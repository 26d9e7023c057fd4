#include "mpsts/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "mpsts/errors.hpp"

namespace mpsts {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValues read_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_key_values(in);
}

void write_key_values(std::ostream& out, const KeyValues& kv) {
    for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

double parse_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ConfigError("'" + key + "': cannot parse '" + text + "' as a number");
    }
    return v;
}

std::int64_t parse_int(const std::string& key, const std::string& text) {
    std::int64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ConfigError("'" + key + "': cannot parse '" + text + "' as an integer");
    }
    return v;
}

void TrainConfig::validate() const {
    if (!(eta > 0.0)) throw ConfigError("eta must be positive");
    if (d < 1) throw ConfigError("d must be >= 1");
    if (chi_init < 1) throw ConfigError("chi_init must be >= 1");
    if (chi_max < chi_init) throw ConfigError("chi_max must be >= chi_init");
    if (n_sweeps < 0) throw ConfigError("n_sweeps must be >= 0");
    if (cutoff < 0.0) throw ConfigError("cutoff must be >= 0");
    if (loss_tolerance && *loss_tolerance < 0.0) throw ConfigError("loss_tolerance must be >= 0");
    if (grid_nodes < kPanelOrder || grid_nodes % kPanelOrder != 0) {
        throw ConfigError("grid_nodes must be a positive multiple of " + std::to_string(kPanelOrder));
    }
}

TrainConfig train_config_from(const KeyValues& kv, TrainConfig base) {
    for (const auto& [key, value] : kv) {
        if (key == "eta") base.eta = parse_double(key, value);
        else if (key == "chi_max") base.chi_max = parse_int(key, value);
        else if (key == "d") base.d = parse_int(key, value);
        else if (key == "n_sweeps") base.n_sweeps = parse_int(key, value);
        else if (key == "chi_init") base.chi_init = parse_int(key, value);
        else if (key == "cutoff") base.cutoff = parse_double(key, value);
        else if (key == "seed") base.seed = static_cast<std::uint64_t>(parse_int(key, value));
        else if (key == "loss_tolerance") {
            if (value.empty() || value == "none") base.loss_tolerance.reset();
            else base.loss_tolerance = parse_double(key, value);
        } else if (key == "preprocess") base.preprocess = preprocess_kind_from_string(value);
        else if (key == "grid_nodes") base.grid_nodes = parse_int(key, value);
        else throw ConfigError("unknown training option '" + key + "'");
    }
    base.validate();
    return base;
}

KeyValues to_key_values(const TrainConfig& c) {
    KeyValues kv;
    kv["eta"] = format_double(c.eta);
    kv["chi_max"] = std::to_string(c.chi_max);
    kv["d"] = std::to_string(c.d);
    kv["n_sweeps"] = std::to_string(c.n_sweeps);
    kv["chi_init"] = std::to_string(c.chi_init);
    kv["cutoff"] = format_double(c.cutoff);
    kv["seed"] = std::to_string(c.seed);
    kv["loss_tolerance"] = c.loss_tolerance ? format_double(*c.loss_tolerance) : "none";
    kv["preprocess"] = to_string(c.preprocess);
    kv["grid_nodes"] = std::to_string(c.grid_nodes);
    return kv;
}

}  // namespace mpsts
