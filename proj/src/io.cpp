#include "dep/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "dep/error.hpp"

namespace dep::io {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

constexpr bool kLittleEndianHost = std::endian::native == std::endian::little;

template <typename T>
void put_le(std::string& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>(static_cast<std::uint8_t>(value >> (8 * i))));
    }
}

template <typename T>
T get_le(const char* p) {
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<T>(static_cast<T>(static_cast<std::uint8_t>(p[i])) << (8 * i));
    }
    return value;
}

class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    template <typename T>
    T read(const char* what) {
        if (data_.size() - pos_ < sizeof(T)) {
            throw Error(ErrorCode::Truncated, std::string("unexpected end of data while reading ") + what);
        }
        T v = get_le<T>(data_.data() + pos_);
        pos_ += sizeof(T);
        return v;
    }

    std::size_t remaining() const noexcept { return data_.size() - pos_; }

private:
    std::string_view data_;
    std::size_t pos_ = 0;
};

void check_magic(std::string_view bytes, std::string_view magic, const char* what) {
    const std::size_t n = std::min(bytes.size(), magic.size());
    if (bytes.substr(0, n) != magic.substr(0, n)) {
        throw Error(ErrorCode::BadMagic, std::string(what) + " does not start with magic \"" + std::string(magic) + "\"");
    }
    if (bytes.size() < magic.size()) throw Error(ErrorCode::Truncated, std::string(what) + " is truncated");
}

void swap_float_bytes(std::span<float> values) {
    for (float& v : values) {
        auto bits = std::bit_cast<std::uint32_t>(v);
        bits = (bits >> 24) | ((bits >> 8) & 0xFF00u) | ((bits << 8) & 0xFF0000u) | (bits << 24);
        v = std::bit_cast<float>(bits);
    }
}

[[noreturn]] void parse_error(const std::string& message) { throw Error(ErrorCode::ParseError, message); }

const Json& field(const Json& json, const char* key) {
    if (!json.is_object()) parse_error("expected a JSON object");
    auto it = json.find(key);
    if (it == json.end()) parse_error(std::string("missing field '") + key + "'");
    return *it;
}

std::uint64_t as_u64(const Json& value, const char* key) {
    if (!value.is_number_unsigned()) {
        // Non-negative integers parse as unsigned; anything else is a type error.
        if (!(value.is_number_integer() && value.get<std::int64_t>() >= 0)) {
            parse_error(std::string("field '") + key + "' must be a non-negative integer");
        }
    }
    return value.get<std::uint64_t>();
}

double as_double(const Json& value, const char* key) {
    if (!value.is_number()) parse_error(std::string("field '") + key + "' must be a number");
    return value.get<double>();
}

TokenId as_token(const Json& value, const char* key) {
    const std::uint64_t v = as_u64(value, key);
    if (v > std::numeric_limits<TokenId>::max()) parse_error(std::string("field '") + key + "' exceeds 32 bits");
    return static_cast<TokenId>(v);
}

}  // namespace

std::string encode_dataset_binary(const TokenizedDataset& dataset) {
    std::string out;
    out.reserve(24 + 4 * (dataset.num_sequences() + dataset.total_tokens()));
    out.append(kDatasetMagic);
    put_le<std::uint32_t>(out, kFormatVersion);
    put_le<std::uint64_t>(out, dataset.vocab_size());
    put_le<std::uint64_t>(out, dataset.num_sequences());
    for (std::size_t s = 0; s < dataset.num_sequences(); ++s) {
        const auto seq = dataset.sequence(s);
        if (seq.size() > std::numeric_limits<std::uint32_t>::max()) {
            throw Error(ErrorCode::InvalidArgument, "sequence " + std::to_string(s) + " too long for u32 length");
        }
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(seq.size()));
        for (TokenId id : seq) put_le<std::uint32_t>(out, id);
    }
    return out;
}

TokenizedDataset decode_dataset_binary(std::string_view bytes) {
    check_magic(bytes, kDatasetMagic, "dataset");
    ByteReader reader(bytes.substr(kDatasetMagic.size()));
    const auto version = reader.read<std::uint32_t>("version");
    if (version != kFormatVersion) {
        throw Error(ErrorCode::BadVersion, "unsupported dataset format version " + std::to_string(version));
    }
    const auto vocab_size = reader.read<std::uint64_t>("vocab_size");
    const auto num_sequences = reader.read<std::uint64_t>("num_sequences");
    // Each sequence needs at least its 4-byte length.
    if (num_sequences > reader.remaining() / 4) {
        throw Error(ErrorCode::Truncated, "dataset declares " + std::to_string(num_sequences) +
                                              " sequences but holds too few bytes");
    }
    std::vector<std::size_t> offsets;
    offsets.reserve(num_sequences + 1);
    offsets.push_back(0);
    std::vector<TokenId> tokens;
    tokens.reserve((reader.remaining() - 4 * num_sequences) / 4);
    for (std::uint64_t s = 0; s < num_sequences; ++s) {
        const auto length = reader.read<std::uint32_t>("sequence length");
        if (length > reader.remaining() / 4) {
            throw Error(ErrorCode::Truncated, "sequence " + std::to_string(s) + " is truncated");
        }
        for (std::uint32_t k = 0; k < length; ++k) tokens.push_back(reader.read<std::uint32_t>("token id"));
        offsets.push_back(tokens.size());
    }
    if (reader.remaining() != 0) {
        parse_error("dataset has " + std::to_string(reader.remaining()) + " trailing bytes");
    }
    return TokenizedDataset::from_flat(std::move(tokens), std::move(offsets), vocab_size);
}

std::string encode_dataset_text(const TokenizedDataset& dataset) {
    std::string out;
    for (std::size_t s = 0; s < dataset.num_sequences(); ++s) {
        bool first = true;
        for (TokenId id : dataset.sequence(s)) {
            if (!first) out.push_back(' ');
            out.append(std::to_string(id));
            first = false;
        }
        out.push_back('\n');
    }
    return out;
}

TokenizedDataset decode_dataset_text(std::string_view text, std::uint64_t vocab_size) {
    std::vector<TokenId> tokens;
    std::vector<std::size_t> offsets{0};
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        std::size_t pos = 0;
        while (pos < line.size()) {
            if (line[pos] == ' ' || line[pos] == '\t') {
                ++pos;
                continue;
            }
            std::uint64_t value = 0;
            const auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + line.size(), value);
            const std::size_t end = static_cast<std::size_t>(ptr - line.data());
            if (ec != std::errc{} || (end < line.size() && line[end] != ' ' && line[end] != '\t')) {
                parse_error("line " + std::to_string(line_no) + ": invalid token id near column " +
                            std::to_string(pos + 1));
            }
            if (value > std::numeric_limits<TokenId>::max()) {
                parse_error("line " + std::to_string(line_no) + ": token id exceeds 32 bits");
            }
            tokens.push_back(static_cast<TokenId>(value));
            pos = end;
        }
        offsets.push_back(tokens.size());
    }
    return TokenizedDataset::from_flat(std::move(tokens), std::move(offsets), vocab_size);
}

bool has_dataset_magic(std::string_view bytes) noexcept { return bytes.substr(0, 4) == kDatasetMagic; }

TokenizedDataset load_dataset(const std::filesystem::path& path, std::optional<std::uint64_t> vocab_size) {
    const std::string bytes = read_file(path);
    if (has_dataset_magic(bytes)) {
        TokenizedDataset dataset = decode_dataset_binary(bytes);
        if (vocab_size && *vocab_size != dataset.vocab_size()) {
            throw Error(ErrorCode::ShapeMismatch, path.string() + ": dataset vocab size " +
                                                      std::to_string(dataset.vocab_size()) + " != expected " +
                                                      std::to_string(*vocab_size));
        }
        return dataset;
    }
    const bool looks_textual = std::all_of(bytes.begin(), bytes.end(), [](char c) {
        return (c >= '0' && c <= '9') || c == ' ' || c == '\t' || c == '\n' || c == '\r';
    });
    if (!looks_textual) {
        throw Error(ErrorCode::BadMagic, path.string() + " is neither a binary dataset (magic \"DEPT\") nor a "
                                                         "text dataset of decimal ids");
    }
    if (!vocab_size) {
        throw Error(ErrorCode::Usage,
                    path.string() + " is a text dataset; its vocab size must be given (--vocab-size, "
                                    "--embeddings or --model-config)");
    }
    return decode_dataset_text(bytes, *vocab_size);
}

void write_embeddings(std::ostream& out, const EmbeddingMatrix& matrix) {
    std::string header;
    header.append(kEmbeddingMagic);
    put_le<std::uint32_t>(header, kFormatVersion);
    put_le<std::uint8_t>(header, kDtypeFloat32);
    put_le<std::uint64_t>(header, matrix.rows());
    put_le<std::uint64_t>(header, matrix.dim());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    const auto data = matrix.data();
    if constexpr (kLittleEndianHost) {
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
    } else {
        std::vector<float> swapped(data.begin(), data.end());
        swap_float_bytes(swapped);
        out.write(reinterpret_cast<const char*>(swapped.data()), static_cast<std::streamsize>(data.size_bytes()));
    }
}

EmbeddingHeader read_embedding_header(std::istream& in) {
    char buf[kEmbeddingHeaderSize];
    in.read(buf, sizeof(buf));
    const auto got = static_cast<std::size_t>(in.gcount());
    const std::string_view bytes(buf, got);
    check_magic(bytes, kEmbeddingMagic, "embedding file");
    if (got < kEmbeddingHeaderSize) throw Error(ErrorCode::Truncated, "embedding header is truncated");
    const auto version = get_le<std::uint32_t>(buf + 4);
    if (version != kFormatVersion) {
        throw Error(ErrorCode::BadVersion, "unsupported embedding format version " + std::to_string(version));
    }
    const auto dtype = static_cast<std::uint8_t>(buf[8]);
    if (dtype != kDtypeFloat32) throw Error(ErrorCode::BadDtype, "unsupported dtype code " + std::to_string(dtype));
    EmbeddingHeader header{get_le<std::uint64_t>(buf + 9), get_le<std::uint64_t>(buf + 17)};
    if (header.cols == 0) parse_error("embedding cols must be >= 1");
    if (header.rows > std::numeric_limits<std::uint64_t>::max() / header.cols / sizeof(float)) {
        parse_error("embedding shape overflows");
    }
    return header;
}

EmbeddingMatrix read_embeddings(std::istream& in) {
    const EmbeddingHeader header = read_embedding_header(in);
    const std::uint64_t count = header.rows * header.cols;
    const std::uint64_t payload = count * sizeof(float);

    // Check the payload length up front when the stream is seekable, so a
    // bogus header cannot trigger a huge allocation.
    const auto here = in.tellg();
    if (here != std::streampos(-1)) {
        in.seekg(0, std::ios::end);
        const auto end = in.tellg();
        in.seekg(here);
        const auto available = static_cast<std::uint64_t>(end - here);
        if (available < payload) throw Error(ErrorCode::Truncated, "embedding payload is truncated");
        if (available > payload) {
            parse_error("embedding file has " + std::to_string(available - payload) + " trailing bytes");
        }
    }
    std::vector<float> data(count);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(payload));
    if (static_cast<std::uint64_t>(in.gcount()) != payload) {
        throw Error(ErrorCode::Truncated, "embedding payload is truncated");
    }
    if constexpr (!kLittleEndianHost) swap_float_bytes(data);
    if (here == std::streampos(-1) && in.peek() != std::char_traits<char>::eof()) {
        parse_error("embedding file has trailing bytes");
    }
    return EmbeddingMatrix(header.rows, header.cols, std::move(data));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingInput, "cannot open " + path.string());
    try {
        return read_embeddings(in);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

EmbeddingHeader load_embedding_header(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingInput, "cannot open " + path.string());
    return read_embedding_header(in);
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix, bool force) {
    check_writable(path, force);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::UnwritableOutput, "cannot write " + path.string());
    write_embeddings(out, matrix);
    out.flush();
    if (!out) throw Error(ErrorCode::UnwritableOutput, "failed writing " + path.string());
}

Json remap_to_json(const RemapTable& remap) {
    Json pairs = Json::array();
    const auto inverse = remap.inverse();
    for (std::size_t j = 0; j < inverse.size(); ++j) pairs.push_back(Json::array({inverse[j], j}));
    Json out;
    out["original_vocab_size"] = remap.original_vocab_size();
    out["ordering"] = std::string(to_string(remap.ordering()));
    out["keep_tokens"] = std::vector<TokenId>(remap.keep_tokens().begin(), remap.keep_tokens().end());
    out["pairs"] = std::move(pairs);
    return out;
}

RemapTable remap_from_json(const Json& json) {
    const std::uint64_t vocab = as_u64(field(json, "original_vocab_size"), "original_vocab_size");
    const Json& ordering_json = field(json, "ordering");
    if (!ordering_json.is_string()) parse_error("field 'ordering' must be a string");
    Ordering ordering;
    try {
        ordering = parse_ordering(ordering_json.get<std::string>());
    } catch (const Error& e) {
        parse_error(e.what());
    }
    const Json& keep_json = field(json, "keep_tokens");
    if (!keep_json.is_array()) parse_error("field 'keep_tokens' must be an array");
    std::vector<TokenId> keep;
    for (const auto& k : keep_json) keep.push_back(as_token(k, "keep_tokens"));

    const Json& pairs = field(json, "pairs");
    if (!pairs.is_array()) parse_error("field 'pairs' must be an array");
    std::vector<TokenId> inverse;
    inverse.reserve(pairs.size());
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        const Json& pair = pairs[j];
        if (!pair.is_array() || pair.size() != 2) parse_error("pairs[" + std::to_string(j) + "] must be [orig, new]");
        const TokenId orig = as_token(pair[0], "pairs");
        const std::uint64_t dense = as_u64(pair[1], "pairs");
        if (dense != j) {
            throw Error(ErrorCode::RemapInconsistent, "pairs must be sorted by new id and dense; pairs[" +
                                                          std::to_string(j) + "] has new id " + std::to_string(dense));
        }
        inverse.push_back(orig);
    }
    return RemapTable::from_inverse(vocab, std::move(inverse), ordering, std::move(keep));
}

Json report_to_json(const PruneReport& report) {
    Json out;
    out["config_name"] = report.config_name;
    out["original_vocab"] = report.original_vocab;
    out["reduced_vocab"] = report.reduced_vocab;
    out["d_model"] = report.d_model;
    out["n_total"] = report.n_total;
    out["n_emb"] = report.n_emb;
    out["poep"] = report.poep;
    out["pr_emb"] = report.pr_emb;
    out["pr_all"] = report.pr_all;
    out["bytes_saved"] = report.bytes_saved;
    out["timestamp"] = report.timestamp ? Json(*report.timestamp) : Json(nullptr);
    out["presentation"] = {
        {"poep_pct", to_percent_1dp(report.poep)},
        {"pr_emb_pct", to_percent_1dp(report.pr_emb)},
        {"pr_all_pct", to_percent_1dp(report.pr_all)},
    };
    return out;
}

PruneReport report_from_json(const Json& json) {
    PruneReport r;
    const Json& name = field(json, "config_name");
    if (!name.is_string()) parse_error("field 'config_name' must be a string");
    r.config_name = name.get<std::string>();
    r.original_vocab = as_u64(field(json, "original_vocab"), "original_vocab");
    r.reduced_vocab = as_u64(field(json, "reduced_vocab"), "reduced_vocab");
    r.d_model = as_u64(field(json, "d_model"), "d_model");
    r.n_total = as_u64(field(json, "n_total"), "n_total");
    r.n_emb = as_u64(field(json, "n_emb"), "n_emb");
    r.poep = as_double(field(json, "poep"), "poep");
    r.pr_emb = as_double(field(json, "pr_emb"), "pr_emb");
    r.pr_all = as_double(field(json, "pr_all"), "pr_all");
    r.bytes_saved = as_u64(field(json, "bytes_saved"), "bytes_saved");
    const Json& ts = field(json, "timestamp");
    if (ts.is_string()) {
        r.timestamp = ts.get<std::string>();
    } else if (!ts.is_null()) {
        parse_error("field 'timestamp' must be a string or null");
    }
    return r;
}

Json model_config_to_json(const ModelConfig& config) {
    Json out;
    out["name"] = config.name;
    out["vocab_size"] = config.vocab_size;
    out["d_model"] = config.d_model;
    out["num_layers"] = config.num_layers;
    out["num_heads"] = config.num_heads;
    out["ffn_dim"] = config.effective_ffn_dim();
    out["max_positions"] = config.max_positions;
    out["type_vocab"] = config.type_vocab;
    out["has_pooler"] = config.has_pooler;
    return out;
}

ModelConfig model_config_from_json(const Json& json) {
    ModelConfig c;
    if (json.contains("name")) {
        if (!json["name"].is_string()) parse_error("field 'name' must be a string");
        c.name = json["name"].get<std::string>();
    }
    c.vocab_size = as_u64(field(json, "vocab_size"), "vocab_size");
    c.d_model = as_u64(field(json, "d_model"), "d_model");
    c.num_layers = as_u64(field(json, "num_layers"), "num_layers");
    c.num_heads = as_u64(field(json, "num_heads"), "num_heads");
    if (json.contains("ffn_dim")) c.ffn_dim = as_u64(json["ffn_dim"], "ffn_dim");
    if (json.contains("max_positions")) c.max_positions = as_u64(json["max_positions"], "max_positions");
    if (json.contains("type_vocab")) c.type_vocab = as_u64(json["type_vocab"], "type_vocab");
    if (json.contains("has_pooler")) {
        if (!json["has_pooler"].is_boolean()) parse_error("field 'has_pooler' must be a boolean");
        c.has_pooler = json["has_pooler"].get<bool>();
    }
    c.validate();
    return c;
}

ModelConfig resolve_model_config(std::string_view reference) {
    if (auto preset = model_preset(reference)) return *preset;
    const std::filesystem::path path{std::string(reference)};
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw Error(ErrorCode::MissingInput,
                    "model config '" + std::string(reference) + "' is neither a preset nor a readable file");
    }
    ModelConfig config = model_config_from_json(parse_json(read_file(path)));
    if (config.name.empty()) config.name = path.stem().string();
    return config;
}

Json param_count_to_json(const ModelConfig& config, const ParamCount& params) {
    const auto& b = params.breakdown;
    Json out;
    out["config"] = model_config_to_json(config);
    out["n_total"] = params.n_total;
    out["n_emb"] = params.n_emb;
    out["poep"] = params.poep;
    out["breakdown"] = {
        {"token_embeddings", b.token_embeddings},
        {"position_embeddings", b.position_embeddings},
        {"segment_embeddings", b.segment_embeddings},
        {"embedding_norm", b.embedding_norm},
        {"attention", b.attention},
        {"feed_forward", b.feed_forward},
        {"layer_norms", b.layer_norms},
        {"pooler", b.pooler},
    };
    out["presentation"] = {
        {"n_total_m", std::round(static_cast<double>(params.n_total) / 1e5) / 10.0},
        {"n_emb_m", std::round(static_cast<double>(params.n_emb) / 1e5) / 10.0},
        {"poep_pct", to_percent_1dp(params.poep)},
    };
    return out;
}

std::string growth_curve_csv(const GrowthCurve& curve) {
    std::string out = "tokens,unique\n";
    for (const auto& p : curve.points) {
        out += std::to_string(p.tokens_seen);
        out += ',';
        out += std::to_string(p.unique_tokens);
        out += '\n';
    }
    return out;
}

std::string frequency_csv(const FrequencyTable& freqs) {
    std::string out = "token,count\n";
    const auto counts = freqs.counts();
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        out += std::to_string(i);
        out += ',';
        out += std::to_string(counts[i]);
        out += '\n';
    }
    return out;
}

std::string dump(const Json& json) { return json.dump(2) + "\n"; }

Json parse_json(std::string_view text) {
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        parse_error(std::string("invalid JSON: ") + e.what());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingInput, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void check_writable(const std::filesystem::path& path, bool force) {
    std::error_code ec;
    if (!force && std::filesystem::exists(path, ec)) {
        throw Error(ErrorCode::OutputExists, path.string() + " already exists (use --force to overwrite)");
    }
}

void write_file(const std::filesystem::path& path, std::string_view bytes, bool force) {
    check_writable(path, force);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::UnwritableOutput, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::UnwritableOutput, "failed writing " + path.string());
}

}  // namespace dep::io
