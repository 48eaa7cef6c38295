#include "dep/analysis.hpp"

#include <cmath>
#include <string>

#include "dep/error.hpp"

namespace dep {

namespace {

// Replays the stream once and records the distinct count at each checkpoint.
// `next_checkpoint(n)` returns the checkpoint following n.
template <typename NextCheckpoint>
GrowthCurve replay(const TokenizedDataset& dataset, std::uint64_t first_checkpoint, NextCheckpoint next_checkpoint) {
    GrowthCurve curve;
    curve.vocab_size = dataset.vocab_size();
    const auto ids = dataset.tokens();
    const std::uint64_t total = ids.size();
    std::vector<bool> seen(dataset.vocab_size(), false);
    std::uint64_t unique = 0;
    std::uint64_t checkpoint = first_checkpoint;
    for (std::uint64_t n = 1; n <= total; ++n) {
        const TokenId id = ids[n - 1];
        if (!seen[id]) {
            seen[id] = true;
            ++unique;
        }
        if (n == checkpoint || n == total) {
            curve.points.push_back({n, unique});
            if (n == checkpoint) checkpoint = next_checkpoint(n);
        }
    }
    return curve;
}

}  // namespace

GrowthCurve growth_curve(const TokenizedDataset& dataset, CheckpointPolicy policy) {
    if (policy == CheckpointPolicy::EveryToken) {
        return replay(dataset, 1, [](std::uint64_t n) { return n + 1; });
    }
    return replay(dataset, 1, [](std::uint64_t n) { return n * 2; });
}

GrowthCurve growth_curve(const TokenizedDataset& dataset, std::span<const std::uint64_t> checkpoints) {
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        if (checkpoints[i] == 0 || (i > 0 && checkpoints[i] <= checkpoints[i - 1])) {
            throw Error(ErrorCode::InvalidArgument, "checkpoints must be strictly increasing and >= 1");
        }
    }
    std::size_t cursor = 0;
    const std::uint64_t first = checkpoints.empty() ? 0 : checkpoints[0];
    return replay(dataset, first, [&](std::uint64_t) {
        ++cursor;
        return cursor < checkpoints.size() ? checkpoints[cursor] : 0;
    });
}

double HeapsFit::predict(double tokens) const { return k * std::pow(tokens, beta); }

HeapsFit fit_heaps(const GrowthCurve& curve) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& p : curve.points) {
        if (p.tokens_seen >= 1 && p.unique_tokens >= 1) {
            xs.push_back(std::log(static_cast<double>(p.tokens_seen)));
            ys.push_back(std::log(static_cast<double>(p.unique_tokens)));
        }
    }
    const std::size_t n = xs.size();
    if (n < 2) {
        throw Error(ErrorCode::InsufficientPoints,
                    "Heaps fit needs at least 2 usable points, got " + std::to_string(n));
    }
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += xs[i];
        mean_y += ys[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
        sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
    }
    if (sxx == 0.0) throw Error(ErrorCode::DegenerateFit, "all curve points share the same token count");

    HeapsFit fit;
    fit.beta = sxy / sxx;
    const double log_k = mean_y - fit.beta * mean_x;
    fit.k = std::exp(log_k);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (log_k + fit.beta * xs[i]);
        sse += r * r;
    }
    fit.rmse_log = std::sqrt(sse / static_cast<double>(n));
    fit.points_used = n;
    return fit;
}

double coverage_ratio(const FrequencyTable& freqs) {
    if (freqs.vocab_size() == 0) return 0.0;
    return static_cast<double>(freqs.used_count()) / static_cast<double>(freqs.vocab_size());
}

std::vector<TokenId> find_unused_tokens(const FrequencyTable& freqs) {
    std::vector<TokenId> out;
    const auto counts = freqs.counts();
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) out.push_back(static_cast<TokenId>(i));
    }
    return out;
}

}  // namespace dep
