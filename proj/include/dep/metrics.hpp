#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dep/embedding.hpp"
#include "dep/vocab.hpp"

namespace dep {

// BERT-style encoder shape. Defaults follow the BERT family (512 positions,
// 2 segment types, pooler present); RoBERTa-style models use 514 positions
// and 1 type.
struct ModelConfig {
    std::string name;
    std::uint64_t vocab_size = 0;
    std::uint64_t d_model = 0;
    std::uint64_t num_layers = 0;
    std::uint64_t num_heads = 1;
    std::uint64_t ffn_dim = 0;  // 0 means 4 * d_model
    std::uint64_t max_positions = 512;
    std::uint64_t type_vocab = 2;
    bool has_pooler = true;

    std::uint64_t effective_ffn_dim() const noexcept { return ffn_dim == 0 ? 4 * d_model : ffn_dim; }

    // Throws InvalidConfig. vocab_size, d_model, num_heads and max_positions
    // must be >= 1 and d_model divisible by num_heads; num_layers and
    // type_vocab may be 0.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

// Built-in configurations for the checkpoints the savings tables refer to:
// bert-tiny, bert-mini, bert-small, bert-medium, bert-base, bert-large,
// distilbert-base, distilroberta-base, roberta-base, mbert-base,
// xlm-roberta-base.
std::optional<ModelConfig> model_preset(std::string_view name);
std::vector<std::string> model_preset_names();

// Parameter count per named tensor group. Each field is the total over all
// layers.
struct ParamBreakdown {
    std::uint64_t token_embeddings = 0;     // word_embeddings: |V| x d
    std::uint64_t position_embeddings = 0;  // position_embeddings: P x d
    std::uint64_t segment_embeddings = 0;   // token_type_embeddings: T x d
    std::uint64_t embedding_norm = 0;       // embeddings.LayerNorm: gamma + beta
    std::uint64_t attention = 0;            // query/key/value/output: 4 (d x d + d)
    std::uint64_t feed_forward = 0;         // intermediate d x f + f, output f x d + d
    std::uint64_t layer_norms = 0;          // attention and output LayerNorm: 2 (2d)
    std::uint64_t pooler = 0;               // pooler dense: d x d + d

    std::uint64_t total() const noexcept;
};

struct ParamCount {
    std::uint64_t n_total = 0;
    std::uint64_t n_emb = 0;
    double poep = 0.0;  // n_emb / n_total
    ParamBreakdown breakdown;
};

ParamCount count_params(const ModelConfig& config);

// 1 - reduced / original. Throws InvalidCounts unless
// 0 <= reduced <= original and original >= 1.
double pr_emb(std::uint64_t original_vocab, std::uint64_t reduced_vocab);

// pr_emb * poep, i.e. 1 - N'/N when only the embedding matrix shrinks.
// Throws InvalidCounts if pr_emb_value is outside [0, 1].
double pr_all(double pr_emb_value, const ParamCount& params);

// Fraction rendered as a percentage rounded to one decimal (0.94312 -> 94.3).
double to_percent_1dp(double fraction);

struct PruneReport {
    std::string config_name;
    std::uint64_t original_vocab = 0;
    std::uint64_t reduced_vocab = 0;
    std::uint64_t d_model = 0;
    std::uint64_t n_total = 0;
    std::uint64_t n_emb = 0;
    double poep = 0.0;
    double pr_emb = 0.0;
    double pr_all = 0.0;
    std::uint64_t bytes_saved = 0;
    std::optional<std::string> timestamp;

    bool operator==(const PruneReport&) const = default;
};

// Optional inputs are cross-checked against the remap and config when given;
// any disagreement throws InconsistentInputs naming the pair.
struct ReportInputs {
    const FrequencyTable* freqs = nullptr;
    const EmbeddingMatrix* matrix_before = nullptr;
    const EmbeddingMatrix* matrix_after = nullptr;
    std::optional<std::string> timestamp;
};

PruneReport build_report(const RemapTable& remap, const ModelConfig& config, const ReportInputs& inputs = {});

}  // namespace dep
