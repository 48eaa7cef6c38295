#include "dep/metrics.hpp"

#include <array>
#include <cmath>

#include "dep/error.hpp"

namespace dep {

namespace {

struct Preset {
    std::string_view name;
    std::uint64_t vocab_size;
    std::uint64_t d_model;
    std::uint64_t num_layers;
    std::uint64_t num_heads;
    std::uint64_t max_positions;
    std::uint64_t type_vocab;
    bool has_pooler;
};

// distilbert-base has no segment embeddings and no pooler, but its
// classification head starts with a d x d dense layer (pre_classifier). It is
// counted through has_pooler so N matches the fine-tuned model.
constexpr std::array kPresets = {
    Preset{"bert-tiny", 30522, 128, 2, 2, 512, 2, true},
    Preset{"bert-mini", 30522, 256, 4, 4, 512, 2, true},
    Preset{"bert-small", 30522, 512, 4, 8, 512, 2, true},
    Preset{"bert-medium", 30522, 512, 8, 8, 512, 2, true},
    Preset{"bert-base", 30522, 768, 12, 12, 512, 2, true},
    Preset{"bert-large", 30522, 1024, 24, 16, 512, 2, true},
    Preset{"distilbert-base", 30522, 768, 6, 12, 512, 0, true},
    Preset{"distilroberta-base", 50265, 768, 6, 12, 514, 1, true},
    Preset{"roberta-base", 50265, 768, 12, 12, 514, 1, true},
    Preset{"mbert-base", 105879, 768, 12, 12, 512, 2, true},
    Preset{"xlm-roberta-base", 250002, 768, 12, 12, 514, 1, true},
};

void require(bool ok, ErrorCode code, const std::string& message) {
    if (!ok) throw Error(code, message);
}

}  // namespace

void ModelConfig::validate() const {
    require(vocab_size >= 1, ErrorCode::InvalidConfig, "vocab_size must be >= 1");
    require(d_model >= 1, ErrorCode::InvalidConfig, "d_model must be >= 1");
    require(num_heads >= 1, ErrorCode::InvalidConfig, "num_heads must be >= 1");
    require(max_positions >= 1, ErrorCode::InvalidConfig, "max_positions must be >= 1");
    require(d_model % num_heads == 0, ErrorCode::InvalidConfig,
            "d_model " + std::to_string(d_model) + " is not divisible by num_heads " + std::to_string(num_heads));
}

std::optional<ModelConfig> model_preset(std::string_view name) {
    for (const auto& p : kPresets) {
        if (p.name != name) continue;
        ModelConfig config;
        config.name = std::string(p.name);
        config.vocab_size = p.vocab_size;
        config.d_model = p.d_model;
        config.num_layers = p.num_layers;
        config.num_heads = p.num_heads;
        config.max_positions = p.max_positions;
        config.type_vocab = p.type_vocab;
        config.has_pooler = p.has_pooler;
        return config;
    }
    return std::nullopt;
}

std::vector<std::string> model_preset_names() {
    std::vector<std::string> names;
    for (const auto& p : kPresets) names.emplace_back(p.name);
    return names;
}

std::uint64_t ParamBreakdown::total() const noexcept {
    return token_embeddings + position_embeddings + segment_embeddings + embedding_norm + attention +
           feed_forward + layer_norms + pooler;
}

ParamCount count_params(const ModelConfig& config) {
    config.validate();
    const std::uint64_t d = config.d_model;
    const std::uint64_t f = config.effective_ffn_dim();
    const std::uint64_t l = config.num_layers;

    ParamBreakdown b;
    b.token_embeddings = config.vocab_size * d;
    b.position_embeddings = config.max_positions * d;
    b.segment_embeddings = config.type_vocab * d;
    b.embedding_norm = 2 * d;
    b.attention = l * 4 * (d * d + d);
    b.feed_forward = l * ((d * f + f) + (f * d + d));
    b.layer_norms = l * 2 * (2 * d);
    b.pooler = config.has_pooler ? d * d + d : 0;

    ParamCount out;
    out.breakdown = b;
    out.n_total = b.total();
    out.n_emb = b.token_embeddings;
    out.poep = static_cast<double>(out.n_emb) / static_cast<double>(out.n_total);
    return out;
}

double pr_emb(std::uint64_t original_vocab, std::uint64_t reduced_vocab) {
    require(original_vocab >= 1, ErrorCode::InvalidCounts, "original vocab must be >= 1");
    require(reduced_vocab <= original_vocab, ErrorCode::InvalidCounts,
            "reduced vocab " + std::to_string(reduced_vocab) + " exceeds original " + std::to_string(original_vocab));
    return 1.0 - static_cast<double>(reduced_vocab) / static_cast<double>(original_vocab);
}

double pr_all(double pr_emb_value, const ParamCount& params) {
    require(pr_emb_value >= 0.0 && pr_emb_value <= 1.0, ErrorCode::InvalidCounts, "pr_emb must lie in [0, 1]");
    return pr_emb_value * params.poep;
}

double to_percent_1dp(double fraction) { return std::round(fraction * 1000.0) / 10.0; }

PruneReport build_report(const RemapTable& remap, const ModelConfig& config, const ReportInputs& inputs) {
    auto mismatch = [](const std::string& what) { throw Error(ErrorCode::InconsistentInputs, what); };

    if (remap.original_vocab_size() != config.vocab_size) {
        mismatch("remap/config: remap original vocab " + std::to_string(remap.original_vocab_size()) +
                 " != config vocab_size " + std::to_string(config.vocab_size));
    }
    if (inputs.freqs) {
        if (inputs.freqs->vocab_size() != remap.original_vocab_size()) {
            mismatch("freqs/remap: frequency table vocab " + std::to_string(inputs.freqs->vocab_size()) +
                     " != remap original vocab " + std::to_string(remap.original_vocab_size()));
        }
        for (TokenId id : inputs.freqs->used_tokens()) {
            if (!remap.contains(id)) mismatch("freqs/remap: used token " + std::to_string(id) + " is not mapped");
        }
    }
    if (inputs.matrix_before) {
        if (inputs.matrix_before->rows() != remap.original_vocab_size()) {
            mismatch("matrix_before/remap: " + std::to_string(inputs.matrix_before->rows()) + " rows != " +
                     std::to_string(remap.original_vocab_size()));
        }
        if (inputs.matrix_before->dim() != config.d_model) {
            mismatch("matrix_before/config: dim " + std::to_string(inputs.matrix_before->dim()) +
                     " != d_model " + std::to_string(config.d_model));
        }
    }
    if (inputs.matrix_after) {
        if (inputs.matrix_after->rows() != remap.size()) {
            mismatch("matrix_after/remap: " + std::to_string(inputs.matrix_after->rows()) + " rows != " +
                     std::to_string(remap.size()));
        }
        if (inputs.matrix_after->dim() != config.d_model) {
            mismatch("matrix_after/config: dim " + std::to_string(inputs.matrix_after->dim()) + " != d_model " +
                     std::to_string(config.d_model));
        }
    }

    const ParamCount params = count_params(config);
    PruneReport report;
    report.config_name = config.name;
    report.original_vocab = remap.original_vocab_size();
    report.reduced_vocab = remap.size();
    report.d_model = config.d_model;
    report.n_total = params.n_total;
    report.n_emb = params.n_emb;
    report.poep = params.poep;
    report.pr_emb = pr_emb(report.original_vocab, report.reduced_vocab);
    report.pr_all = pr_all(report.pr_emb, params);
    report.bytes_saved = (report.original_vocab - report.reduced_vocab) * config.d_model * sizeof(float);
    report.timestamp = inputs.timestamp;
    return report;
}

}  // namespace dep
