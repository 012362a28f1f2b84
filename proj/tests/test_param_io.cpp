#include <gtest/gtest.h>

#include <filesystem>

#include "climoe/nn/param_io.hpp"

using namespace climoe;
using namespace climoe::nn;

TEST(ParamIo, RoundTripIsBitExactForRandomSpecs) {
    SplitMix64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        MlpSpec spec{1 + rng.below(20), {}, 1 + rng.below(5)};
        for (auto d = rng.below(4); d > 0; --d) spec.hidden_dims.push_back(1 + rng.below(16));
        auto p = init_params(spec, rng.next());
        // awkward values: subnormals, signed zero, extremes
        p.values[0] = -0.0;
        if (p.size() > 1) p.values[1] = 4.9e-324;
        if (p.size() > 2) p.values[2] = 1.7976931348623157e308;
        const auto back = decode_params(encode_params(spec, p));
        EXPECT_EQ(back.spec, spec);
        EXPECT_EQ(back.params.fingerprint(), p.fingerprint());
        EXPECT_TRUE(std::signbit(back.params.values[0]));
    }
}

TEST(ParamIo, HeaderLayout) {
    MlpSpec spec{2, {3}, 1};
    const auto bytes = encode_params(spec, init_params(spec, 1));
    EXPECT_EQ(bytes.substr(0, 4), "CLMO");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);  // version, little-endian
    const std::string desc = spec.descriptor();
    EXPECT_EQ(bytes.substr(12, desc.size()), desc);
    EXPECT_EQ(bytes.size(), 4 + 4 + 4 + desc.size() + 8 + 13 * 8);
}

TEST(ParamIo, WrongSpecIsExplicitMismatch) {
    MlpSpec spec{2, {3}, 1}, other{2, {4}, 1};
    const auto bytes = encode_params(spec, init_params(spec, 1));
    try {
        decode_params(bytes, other);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("spec mismatch"), std::string::npos);
    }
}

TEST(ParamIo, TruncatedFileIsCorruption) {
    MlpSpec spec{2, {3}, 1};
    const auto bytes = encode_params(spec, init_params(spec, 1));
    for (std::size_t cut : {std::size_t{2}, std::size_t{10}, bytes.size() - 1})
        EXPECT_THROW(decode_params(std::string_view(bytes).substr(0, cut)), FormatError) << cut;
    EXPECT_THROW(decode_params(bytes + "x"), FormatError);
}

TEST(ParamIo, BadMagicOrVersion) {
    MlpSpec spec{1, {}, 1};
    auto bytes = encode_params(spec, init_params(spec, 1));
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(decode_params(bad), FormatError);
    bad = bytes;
    bad[4] = 9;
    EXPECT_THROW(decode_params(bad), FormatError);
}

TEST(ParamIo, FileRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "climoe_param_io_test.bin";
    MlpSpec spec{4, {8}, 2};
    const auto p = init_params(spec, 123);
    save_params(path, spec, p);
    EXPECT_EQ(load_params(path, spec).params, p);
    std::filesystem::remove(path);
    EXPECT_THROW(load_params(path), FormatError);
}

TEST(Descriptor, ParsesBack) {
    MlpSpec spec{114, {64, 64}, 1};
    EXPECT_EQ(spec.descriptor(), "mlp:114-64-64-1:relu");
    EXPECT_EQ(parse_descriptor(spec.descriptor()), spec);
    EXPECT_THROW(parse_descriptor("mlp:1-x-1:relu"), FormatError);
    EXPECT_THROW(parse_descriptor("cnn:1-1:relu"), FormatError);
}
