#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <unistd.h>
#include <cstring>

#include "dep/error.hpp"
#include "dep/io.hpp"
#include "support/oracles.hpp"

namespace dep {
namespace {

namespace fs = std::filesystem;

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected dep::Error";
    return ErrorCode::Usage;
}

std::string le32(std::uint32_t v) {
    std::string s(4, '\0');
    for (int i = 0; i < 4; ++i) s[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    return s;
}

std::string le64(std::uint64_t v) {
    std::string s(8, '\0');
    for (int i = 0; i < 8; ++i) s[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    return s;
}

std::string float_bytes(float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    return le32(bits);
}

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("dep_io_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

TEST(DatasetBinary, ExactLayout) {
    const TokenizedDataset d({{1, 2}, {}, {5}}, 6);
    const std::string expected = std::string("DEPT") + le32(1) + le64(6) + le64(3) + le32(2) + le32(1) + le32(2) +
                                 le32(0) + le32(1) + le32(5);
    EXPECT_EQ(io::encode_dataset_binary(d), expected);
    EXPECT_EQ(io::decode_dataset_binary(expected), d);
}

TEST(DatasetBinary, RandomRoundTrip) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const std::uint32_t vocab = 1 + static_cast<std::uint32_t>(rng() % 5000);
        const TokenizedDataset d(testing::random_sequences(rng, rng() % 40, 50, vocab), vocab);
        const auto bytes = io::encode_dataset_binary(d);
        EXPECT_EQ(io::decode_dataset_binary(bytes), d);
        EXPECT_EQ(io::encode_dataset_binary(io::decode_dataset_binary(bytes)), bytes);
    }
}

TEST(DatasetBinary, Errors) {
    const auto good = io::encode_dataset_binary(TokenizedDataset({{1, 2}}, 4));
    std::string bad_magic = good;
    bad_magic[0] = 'X';
    EXPECT_EQ(code_of([&] { io::decode_dataset_binary(bad_magic); }), ErrorCode::BadMagic);

    std::string bad_version = good;
    bad_version[4] = 2;
    EXPECT_EQ(code_of([&] { io::decode_dataset_binary(bad_version); }), ErrorCode::BadVersion);

    for (std::size_t cut : {std::size_t{2}, std::size_t{10}, good.size() - 1}) {
        EXPECT_EQ(code_of([&] { io::decode_dataset_binary(good.substr(0, cut)); }), ErrorCode::Truncated) << cut;
    }
    EXPECT_EQ(code_of([&] { io::decode_dataset_binary(good + "x"); }), ErrorCode::ParseError);

    const std::string oor = std::string("DEPT") + le32(1) + le64(4) + le64(1) + le32(1) + le32(4);
    EXPECT_EQ(code_of([&] { io::decode_dataset_binary(oor); }), ErrorCode::OutOfRangeToken);
}

TEST(DatasetText, ParseAndEncode) {
    const auto d = io::decode_dataset_text("1 2\n\n 3  0 \r\n", 4);
    EXPECT_EQ(d.to_nested(), (std::vector<std::vector<TokenId>>{{1, 2}, {}, {3, 0}}));
    EXPECT_EQ(io::encode_dataset_text(d), "1 2\n\n3 0\n");
    EXPECT_EQ(io::decode_dataset_text("", 3).num_sequences(), 0u);
}

TEST(DatasetText, Errors) {
    try {
        io::decode_dataset_text("1 2\n3 x\n", 5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
    EXPECT_EQ(code_of([] { io::decode_dataset_text("-1\n", 5); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { io::decode_dataset_text("99999999999999999999\n", 5); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { io::decode_dataset_text("5\n", 5); }), ErrorCode::OutOfRangeToken);
}

TEST_F(TempDir, LoadDatasetDetectsFormat) {
    const TokenizedDataset d({{1, 2}, {0}}, 3);
    io::write_file(dir_ / "a.dept", io::encode_dataset_binary(d), false);
    io::write_file(dir_ / "a.txt", io::encode_dataset_text(d), false);
    io::write_file(dir_ / "junk", std::string("DEPX\x01\x00", 6), false);

    EXPECT_EQ(io::load_dataset(dir_ / "a.dept"), d);
    EXPECT_EQ(io::load_dataset(dir_ / "a.dept", 3), d);
    EXPECT_EQ(io::load_dataset(dir_ / "a.txt", 3), d);
    EXPECT_EQ(code_of([&] { io::load_dataset(dir_ / "a.dept", 4); }), ErrorCode::ShapeMismatch);
    EXPECT_EQ(code_of([&] { io::load_dataset(dir_ / "a.txt"); }), ErrorCode::Usage);
    EXPECT_EQ(code_of([&] { io::load_dataset(dir_ / "junk", 3); }), ErrorCode::BadMagic);
    EXPECT_EQ(code_of([&] { io::load_dataset(dir_ / "missing", 3); }), ErrorCode::MissingInput);
}

TEST(Embeddings, ExactLayout) {
    const EmbeddingMatrix m(2, 2, {1.0f, -2.0f, 0.5f, 3.25f});
    std::ostringstream out;
    io::write_embeddings(out, m);
    std::string expected = std::string("DEPE") + le32(1) + std::string(1, '\x01') + le64(2) + le64(2);
    ASSERT_EQ(expected.size(), io::kEmbeddingHeaderSize);
    for (float f : {1.0f, -2.0f, 0.5f, 3.25f}) expected += float_bytes(f);
    EXPECT_EQ(out.str(), expected);

    std::istringstream in(expected);
    EXPECT_TRUE(bit_identical(io::read_embeddings(in), m));
}

TEST(Embeddings, Errors) {
    std::ostringstream out;
    io::write_embeddings(out, EmbeddingMatrix(3, 2, {1, 2, 3, 4, 5, 6}));
    const std::string good = out.str();
    auto read = [](std::string bytes) {
        std::istringstream in(bytes);
        io::read_embeddings(in);
    };
    std::string s = good;
    s[3] = 'T';
    EXPECT_EQ(code_of([&] { read(s); }), ErrorCode::BadMagic);
    s = good;
    s[4] = 9;
    EXPECT_EQ(code_of([&] { read(s); }), ErrorCode::BadVersion);
    s = good;
    s[8] = 2;
    EXPECT_EQ(code_of([&] { read(s); }), ErrorCode::BadDtype);
    EXPECT_EQ(code_of([&] { read(good.substr(0, 20)); }), ErrorCode::Truncated);
    EXPECT_EQ(code_of([&] { read(good.substr(0, good.size() - 1)); }), ErrorCode::Truncated);
    EXPECT_EQ(code_of([&] { read(good + "zz"); }), ErrorCode::ParseError);
    const std::string zero_cols = std::string("DEPE") + le32(1) + std::string(1, '\x01') + le64(2) + le64(0);
    EXPECT_EQ(code_of([&] { read(zero_cols); }), ErrorCode::ParseError);
}

TEST_F(TempDir, SaveAndLoadEmbeddings) {
    std::mt19937_64 rng(32);
    const EmbeddingMatrix m(40, 9, testing::flatten(testing::random_rows(rng, 40, 9)));
    const auto path = dir_ / "e.depe";
    io::save_embeddings(path, m, false);
    EXPECT_TRUE(bit_identical(io::load_embeddings(path), m));
    EXPECT_EQ(fs::file_size(path), io::kEmbeddingHeaderSize + m.byte_size());
    const auto header = io::load_embedding_header(path);
    EXPECT_EQ(header.rows, 40u);
    EXPECT_EQ(header.cols, 9u);
    EXPECT_EQ(code_of([&] { io::save_embeddings(path, m, false); }), ErrorCode::OutputExists);
    EXPECT_NO_THROW(io::save_embeddings(path, m, true));
    EXPECT_EQ(code_of([&] { io::save_embeddings(dir_ / "no" / "such" / "dir.depe", m, false); }),
              ErrorCode::UnwritableOutput);
}

TEST(RemapJson, ExactDocument) {
    std::vector<std::uint64_t> counts{1, 0, 5, 0, 3};
    const auto remap = build_remap(FrequencyTable(counts), Ordering::FrequencyDescending, std::vector<TokenId>{3});
    EXPECT_EQ(io::dump(io::remap_to_json(remap)),
              "{\n"
              "  \"original_vocab_size\": 5,\n"
              "  \"ordering\": \"frequency_descending\",\n"
              "  \"keep_tokens\": [\n    3\n  ],\n"
              "  \"pairs\": [\n"
              "    [\n      2,\n      0\n    ],\n"
              "    [\n      4,\n      1\n    ],\n"
              "    [\n      0,\n      2\n    ],\n"
              "    [\n      3,\n      3\n    ]\n"
              "  ]\n"
              "}\n");
    EXPECT_EQ(io::remap_from_json(io::remap_to_json(remap)), remap);
}

TEST(RemapJson, Errors) {
    auto parse = [](const std::string& text) { io::remap_from_json(io::parse_json(text)); };
    EXPECT_EQ(code_of([&] { parse("{"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([&] { parse(R"({"ordering":"ascending_id","keep_tokens":[],"pairs":[]})"); }),
              ErrorCode::ParseError);
    EXPECT_EQ(code_of([&] { parse(R"({"original_vocab_size":3,"ordering":"random","keep_tokens":[],"pairs":[]})"); }),
              ErrorCode::ParseError);
    EXPECT_EQ(code_of([&] {
                  parse(R"({"original_vocab_size":3,"ordering":"ascending_id","keep_tokens":[],"pairs":[[0,1]]})");
              }),
              ErrorCode::RemapInconsistent);
    EXPECT_EQ(code_of([&] {
                  parse(R"({"original_vocab_size":3,"ordering":"ascending_id","keep_tokens":[],"pairs":[[1,0],[1,1]]})");
              }),
              ErrorCode::RemapInconsistent);
    EXPECT_EQ(code_of([&] {
                  parse(R"({"original_vocab_size":3,"ordering":"ascending_id","keep_tokens":[],"pairs":[[3,0]]})");
              }),
              ErrorCode::RemapInconsistent);
}

TEST(ModelConfigJson, RoundTripAndErrors) {
    const auto base = *model_preset("roberta-base");
    const auto back = io::model_config_from_json(io::model_config_to_json(base));
    EXPECT_EQ(count_params(back).n_total, count_params(base).n_total);
    EXPECT_EQ(back.max_positions, 514u);

    const auto minimal = io::model_config_from_json(
        io::parse_json(R"({"vocab_size":100,"d_model":8,"num_layers":1,"num_heads":2})"));
    EXPECT_EQ(minimal.max_positions, 512u);
    EXPECT_EQ(minimal.type_vocab, 2u);
    EXPECT_TRUE(minimal.has_pooler);
    EXPECT_EQ(code_of([] { io::model_config_from_json(io::parse_json(R"({"vocab_size":100})")); }),
              ErrorCode::ParseError);
    EXPECT_EQ(code_of([] {
                  io::model_config_from_json(
                      io::parse_json(R"({"vocab_size":100,"d_model":8,"num_layers":1,"num_heads":3})"));
              }),
              ErrorCode::InvalidConfig);
    EXPECT_EQ(code_of([] { io::resolve_model_config("no-such-model"); }), ErrorCode::MissingInput);
    EXPECT_EQ(io::resolve_model_config("bert-base").d_model, 768u);
}

TEST(Csv, GrowthAndFrequencies) {
    GrowthCurve c;
    c.points = {{1, 1}, {2, 2}};
    EXPECT_EQ(io::growth_curve_csv(c), "tokens,unique\n1,1\n2,2\n");
    EXPECT_EQ(io::frequency_csv(FrequencyTable(std::vector<std::uint64_t>{0, 2, 0, 7})), "token,count\n1,2\n3,7\n");
}

}  // namespace
}  // namespace dep
