#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "dep/analysis.hpp"
#include "dep/embedding.hpp"
#include "dep/metrics.hpp"
#include "dep/vocab.hpp"

// On-disk formats. All binary integers are little-endian.
//
// Dataset (binary):   "DEPT" u32 version=1, u64 vocab_size, u64 num_sequences,
//                     then per sequence: u32 length, length x u32 ids.
// Dataset (text):     one sequence per line, ids as space-separated decimals.
// Embeddings:         "DEPE" u32 version=1, u8 dtype (1 = f32), u64 rows,
//                     u64 cols, then rows x cols values, row-major.
// Remap:              JSON {original_vocab_size, ordering, keep_tokens,
//                     pairs: [[orig, new], ...] sorted by new}.
namespace dep::io {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kDatasetMagic = "DEPT";
inline constexpr std::string_view kEmbeddingMagic = "DEPE";
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;
inline constexpr std::size_t kEmbeddingHeaderSize = 25;

std::string encode_dataset_binary(const TokenizedDataset& dataset);
TokenizedDataset decode_dataset_binary(std::string_view bytes);

std::string encode_dataset_text(const TokenizedDataset& dataset);
TokenizedDataset decode_dataset_text(std::string_view text, std::uint64_t vocab_size);

bool has_dataset_magic(std::string_view bytes) noexcept;

// Binary datasets carry their vocab size; text datasets take `vocab_size`,
// which must then be set (Usage otherwise). For binary files a given
// `vocab_size` must match the header (ShapeMismatch otherwise).
TokenizedDataset load_dataset(const std::filesystem::path& path, std::optional<std::uint64_t> vocab_size = {});

void write_embeddings(std::ostream& out, const EmbeddingMatrix& matrix);
EmbeddingMatrix read_embeddings(std::istream& in);

struct EmbeddingHeader {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
};
EmbeddingHeader read_embedding_header(std::istream& in);

EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
EmbeddingHeader load_embedding_header(const std::filesystem::path& path);
void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix, bool force);

Json remap_to_json(const RemapTable& remap);
// ParseError on malformed JSON structure, RemapInconsistent on a structurally
// valid document that does not describe a bijection.
RemapTable remap_from_json(const Json& json);

Json report_to_json(const PruneReport& report);
PruneReport report_from_json(const Json& json);

Json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const Json& json);

// Preset name, or a path to a model-config JSON file.
ModelConfig resolve_model_config(std::string_view reference);

Json param_count_to_json(const ModelConfig& config, const ParamCount& params);

// Header `tokens,unique`.
std::string growth_curve_csv(const GrowthCurve& curve);
// Header `token,count`; used tokens only, ascending id.
std::string frequency_csv(const FrequencyTable& freqs);

// Two-space indented dump with a trailing newline.
std::string dump(const Json& json);
Json parse_json(std::string_view text);

// MissingInput when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);
// OutputExists if the file exists and !force; UnwritableOutput on I/O failure.
void write_file(const std::filesystem::path& path, std::string_view bytes, bool force);
void check_writable(const std::filesystem::path& path, bool force);

}  // namespace dep::io
