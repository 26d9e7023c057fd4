#include "mpsts/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "mpsts/errors.hpp"

namespace mpsts {

namespace {

constexpr const char* kMagic = "mpsts-model";
constexpr const char* kEndHeader = "END_HEADER";

std::uint64_t to_little(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
        return r;
    }
    return v;
}

void write_doubles(std::ostream& out, std::span<const double> values) {
    std::vector<char> buf(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(values[i]));
        std::memcpy(buf.data() + 8 * i, &bits, 8);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::vector<double> read_doubles(std::istream& in, std::size_t n) {
    std::vector<char> buf(n * 8);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) throw ParseError("model file: truncated tensor payload");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, buf.data() + 8 * i, 8);
        out[i] = std::bit_cast<double>(to_little(bits));
    }
    return out;
}

std::string require(const KeyValues& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("model file: missing header field '" + key + "'");
    return it->second;
}

template <typename F>
auto parse_field(const std::string& key, F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ParseError("model file: bad header field '" + key + "': " + e.what());
    }
}

}  // namespace

ModelBundle::ModelBundle(MPS m, Preprocessor p, TrainConfig c)
    : mps(std::move(m)), preprocessor(p), config(c),
      feature_map_(std::make_shared<const FeatureMap>(mps.phys_dim(), c.grid_nodes)) {
    if (config.d != mps.phys_dim()) {
        throw DimensionError("model bundle: config d = " + std::to_string(config.d) + " but MPS has d = " +
                             std::to_string(mps.phys_dim()));
    }
}

void save_model(const ModelBundle& b, std::ostream& out) {
    const MPS& m = b.mps;
    out << kMagic << '\n';
    out << "format_version " << b.format_version << '\n';
    out << "length " << m.length() << '\n';
    out << "phys_dim " << m.phys_dim() << '\n';
    out << "labels " << m.label_dim() << '\n';
    out << "label_site " << m.label_site() << '\n';
    out << "ortho_center " << (m.ortho_center() ? std::to_string(*m.ortho_center()) : "none") << '\n';
    const Preprocessor& p = b.preprocessor;
    out << "preprocess.kind " << to_string(p.kind) << '\n';
    out << "preprocess.median " << format_double(p.median) << '\n';
    out << "preprocess.iqr " << format_double(p.iqr) << '\n';
    out << "preprocess.lo " << format_double(p.lo) << '\n';
    out << "preprocess.hi " << format_double(p.hi) << '\n';
    out << "preprocess.a " << format_double(p.a) << '\n';
    out << "preprocess.b " << format_double(p.b) << '\n';
    for (const auto& [k, v] : to_key_values(b.config)) out << "config." << k << ' ' << v << '\n';
    for (Index t = 0; t < m.length(); ++t) {
        const Shape& s = m.site(t).shape();
        out << "site." << t << ' ' << s[0] << ' ' << s[1] << ' ' << s[2] << ' ' << s[3] << '\n';
    }
    out << kEndHeader << '\n';
    for (Index t = 0; t < m.length(); ++t) write_doubles(out, m.site(t).data());
    if (!out) throw Error("model file: write failed");
}

void save_model(const ModelBundle& bundle, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    save_model(bundle, out);
}

ModelBundle load_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kMagic) throw ParseError("model file: bad magic line");
    KeyValues header;
    bool closed = false;
    while (std::getline(in, line)) {
        if (line == kEndHeader) {
            closed = true;
            break;
        }
        const auto sp = line.find(' ');
        if (sp == std::string::npos) throw ParseError("model file: malformed header line '" + line + "'");
        header[line.substr(0, sp)] = line.substr(sp + 1);
    }
    if (!closed) throw ParseError("model file: header not terminated");

    const auto version = parse_field("format_version", [&] { return parse_int("format_version", require(header, "format_version")); });
    if (version > kModelFormatVersion) {
        throw VersionError("model file format version " + std::to_string(version) + " is newer than supported version " +
                           std::to_string(kModelFormatVersion));
    }
    if (version < 1) throw VersionError("model file format version " + std::to_string(version) + " is not recognised");

    auto get_int = [&](const std::string& k) { return parse_field(k, [&] { return parse_int(k, require(header, k)); }); };
    auto get_double = [&](const std::string& k) {
        return parse_field(k, [&] { return parse_double(k, require(header, k)); });
    };

    const Index length = get_int("length");
    if (length < 1) throw ParseError("model file: length must be positive");
    const Index label_site = get_int("label_site");
    const std::string center_text = require(header, "ortho_center");
    std::optional<Index> center;
    if (center_text != "none") center = get_int("ortho_center");

    Preprocessor p;
    p.kind = parse_field("preprocess.kind", [&] { return preprocess_kind_from_string(require(header, "preprocess.kind")); });
    p.median = get_double("preprocess.median");
    p.iqr = get_double("preprocess.iqr");
    p.lo = get_double("preprocess.lo");
    p.hi = get_double("preprocess.hi");
    p.a = get_double("preprocess.a");
    p.b = get_double("preprocess.b");

    KeyValues cfg;
    for (const auto& [k, v] : header)
        if (k.rfind("config.", 0) == 0) cfg[k.substr(7)] = v;
    const TrainConfig config = parse_field("config", [&] { return train_config_from(cfg); });

    std::vector<Tensor> sites;
    sites.reserve(static_cast<std::size_t>(length));
    for (Index t = 0; t < length; ++t) {
        const std::string key = "site." + std::to_string(t);
        std::istringstream shape_in(require(header, key));
        Shape shape(4);
        for (Index& e : shape) {
            if (!(shape_in >> e) || e < 1) throw ParseError("model file: bad shape for " + key);
        }
        sites.emplace_back(shape, read_doubles(in, static_cast<std::size_t>(shape_size(shape))));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw ParseError("model file: trailing bytes after payload");

    try {
        MPS mps(std::move(sites), label_site, center);
        if (mps.phys_dim() != get_int("phys_dim") || mps.label_dim() != get_int("labels")) {
            throw ParseError("model file: header dimensions disagree with tensor shapes");
        }
        return ModelBundle(std::move(mps), p, config);
    } catch (const DimensionError& e) {
        throw ParseError(std::string("model file: inconsistent tensors: ") + e.what());
    }
}

ModelBundle load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open model file '" + path + "'");
    return load_model(in);
}

}  // namespace mpsts
