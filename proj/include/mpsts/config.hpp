#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "mpsts/encoding.hpp"

namespace mpsts {

/// Ordered `key = value` pairs. Blank lines and `#` comments are ignored.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values(const std::string& path);
void write_key_values(std::ostream& out, const KeyValues& kv);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& key, const std::string& text);
std::int64_t parse_int(const std::string& key, const std::string& text);

struct TrainConfig {
    double eta = 0.1;
    Index chi_max = 20;
    Index d = 5;
    Index n_sweeps = 10;
    Index chi_init = 4;
    double cutoff = 1e-12;
    std::uint64_t seed = 1;
    std::optional<double> loss_tolerance;
    PreprocessKind preprocess = PreprocessKind::MinMax;
    Index grid_nodes = kDefaultGridNodes;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// Applies recognised keys on top of `base`; unknown keys raise ConfigError.
TrainConfig train_config_from(const KeyValues& kv, TrainConfig base = {});
KeyValues to_key_values(const TrainConfig& config);

}  // namespace mpsts
