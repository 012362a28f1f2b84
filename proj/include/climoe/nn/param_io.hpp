#pragma once

// Binary parameter file:
//   "CLMO" | version u32 | descriptor length u32 | descriptor bytes |
//   parameter count u64 | count x float64
// All integers and floats little-endian.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "climoe/error.hpp"
#include "climoe/nn/mlp.hpp"

namespace climoe::nn {

inline constexpr char kParamMagic[4] = {'C', 'L', 'M', 'O'};
inline constexpr std::uint32_t kParamVersion = 1;

inline MlpSpec parse_descriptor(const std::string& d) {
    // mlp:<in>-<h1>-...-<out>:relu
    if (d.rfind("mlp:", 0) != 0 || d.size() < 10 || d.substr(d.size() - 5) != ":relu")
        throw FormatError("unrecognized network descriptor '" + d + "'");
    std::string dims = d.substr(4, d.size() - 9);
    std::vector<std::size_t> widths;
    std::stringstream ss(dims);
    std::string tok;
    while (std::getline(ss, tok, '-')) {
        if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
            throw FormatError("bad layer width in descriptor '" + d + "'");
        widths.push_back(std::stoull(tok));
    }
    if (widths.size() < 2) throw FormatError("descriptor '" + d + "' has fewer than two layers");
    MlpSpec spec;
    spec.input_dim = widths.front();
    spec.output_dim = widths.back();
    spec.hidden_dims.assign(widths.begin() + 1, widths.end() - 1);
    spec.validate();
    return spec;
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::string_view buf) : buf_(buf) {}
    std::string_view take(std::size_t n, const char* what) {
        if (buf_.size() - pos_ < n) throw FormatError(std::string("parameter file truncated in ") + what);
        auto s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint64_t uint(std::size_t bytes, const char* what) {
        auto s = take(bytes, what);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < bytes; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
        return v;
    }
    std::size_t remaining() const { return buf_.size() - pos_; }

private:
    std::string_view buf_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_params(const MlpSpec& spec, const ParamVector& params) {
    require_compatible(spec, params);
    const std::string desc = spec.descriptor();
    std::string out(kParamMagic, 4);
    detail::put_u32(out, kParamVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(desc.size()));
    out += desc;
    detail::put_u64(out, params.values.size());
    for (double x : params.values) detail::put_u64(out, std::bit_cast<std::uint64_t>(x));
    return out;
}

struct LoadedParams {
    MlpSpec spec;
    ParamVector params;
};

// Decodes a parameter file. With `expected` set, a different descriptor is a
// FormatError. Nothing is returned unless the whole buffer is consistent.
inline LoadedParams decode_params(std::string_view buf, const std::optional<MlpSpec>& expected = {}) {
    detail::Reader r(buf);
    if (r.take(4, "magic") != std::string_view(kParamMagic, 4))
        throw FormatError("not a parameter file (bad magic)");
    const auto version = r.uint(4, "version");
    if (version != kParamVersion)
        throw FormatError("unsupported parameter file version " + std::to_string(version));
    const auto dlen = r.uint(4, "descriptor length");
    const std::string desc(r.take(dlen, "descriptor"));
    LoadedParams out{parse_descriptor(desc), {}};
    if (expected && !(out.spec == *expected))
        throw FormatError("spec mismatch: file holds " + desc + ", expected " + expected->descriptor());
    const auto count = r.uint(8, "parameter count");
    if (count != out.spec.param_count())
        throw FormatError("parameter count " + std::to_string(count) + " does not match " + desc);
    if (r.remaining() != count * 8)
        throw FormatError("parameter file corrupt: expected " + std::to_string(count * 8) +
                          " payload bytes, found " + std::to_string(r.remaining()));
    out.params.spec_hash = out.spec.hash();
    out.params.values.resize(count);
    for (auto& x : out.params.values) x = std::bit_cast<double>(r.uint(8, "payload"));
    return out;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("write failed for " + path.string());
}

inline void save_params(const std::filesystem::path& path, const MlpSpec& spec, const ParamVector& p) {
    write_file(path, encode_params(spec, p));
}

inline LoadedParams load_params(const std::filesystem::path& path,
                                const std::optional<MlpSpec>& expected = {}) {
    try {
        return decode_params(read_file(path), expected);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace climoe::nn
