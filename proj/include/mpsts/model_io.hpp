#pragma once

#include <memory>
#include <string>

#include "mpsts/config.hpp"
#include "mpsts/encoding.hpp"
#include "mpsts/mps.hpp"

namespace mpsts {

inline constexpr int kModelFormatVersion = 1;

/// Everything needed to run inference with a trained model.
struct ModelBundle {
    MPS mps;
    Preprocessor preprocessor;
    TrainConfig config;
    int format_version = kModelFormatVersion;

    ModelBundle(MPS m, Preprocessor p, TrainConfig c);

    [[nodiscard]] const FeatureMap& feature_map() const { return *feature_map_; }

private:
    std::shared_ptr<const FeatureMap> feature_map_;
};

/// Text header (one `key value` per line, closed by END_HEADER) followed by
/// every site tensor as little-endian row-major doubles.
void save_model(const ModelBundle& bundle, const std::string& path);
void save_model(const ModelBundle& bundle, std::ostream& out);

/// ParseError on malformed or truncated input, VersionError on a format
/// written by a newer release.
ModelBundle load_model(const std::string& path);
ModelBundle load_model(std::istream& in);

}  // namespace mpsts
