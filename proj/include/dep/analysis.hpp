#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dep/vocab.hpp"

namespace dep {

struct GrowthPoint {
    std::uint64_t tokens_seen = 0;
    std::uint64_t unique_tokens = 0;

    bool operator==(const GrowthPoint&) const = default;
};

// Distinct-token count as a function of corpus prefix length. Points are
// strictly increasing in tokens_seen; unique_tokens never exceeds
// min(tokens_seen, vocab_size).
struct GrowthCurve {
    std::vector<GrowthPoint> points;
    std::uint64_t vocab_size = 0;

    bool operator==(const GrowthCurve&) const = default;
};

enum class CheckpointPolicy {
    PowersOfTwo,  // 1, 2, 4, ... plus the final token count
    EveryToken,
};

// The token stream is the dataset in stored order: sequence by sequence,
// position by position. The last point is always at total_tokens (an empty
// dataset yields no points).
GrowthCurve growth_curve(const TokenizedDataset& dataset, CheckpointPolicy policy = CheckpointPolicy::PowersOfTwo);

// Explicit checkpoints, strictly increasing and >= 1. Checkpoints past the end
// of the stream are dropped; the final point at total_tokens is always added.
GrowthCurve growth_curve(const TokenizedDataset& dataset, std::span<const std::uint64_t> checkpoints);

// V(n) = k * n^beta, fitted by ordinary least squares on (log n, log V).
struct HeapsFit {
    double k = 0.0;
    double beta = 0.0;
    double rmse_log = 0.0;  // residual RMS in natural-log space
    std::size_t points_used = 0;

    double predict(double tokens) const;
};

// Points with tokens_seen >= 1 and unique_tokens >= 1 are used. Throws
// InsufficientPoints for fewer than two of them and DegenerateFit when they
// all share one tokens_seen value.
HeapsFit fit_heaps(const GrowthCurve& curve);

// |V'| / |V|. Zero for an empty vocabulary.
double coverage_ratio(const FrequencyTable& freqs);

// Ids with zero occurrences, ascending.
std::vector<TokenId> find_unused_tokens(const FrequencyTable& freqs);

}  // namespace dep
