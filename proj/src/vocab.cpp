#include "dep/vocab.hpp"

#include <algorithm>
#include <numeric>
#include <thread>

#include "dep/error.hpp"

namespace dep {

namespace {

[[noreturn]] void throw_out_of_range(std::size_t sequence, std::size_t position, std::uint64_t id,
                                     std::uint64_t vocab_size) {
    throw Error(ErrorCode::OutOfRangeToken,
                "token id " + std::to_string(id) + " at sequence " + std::to_string(sequence) +
                    ", position " + std::to_string(position) + " is outside vocabulary of size " +
                    std::to_string(vocab_size));
}

void check_vocab_size(std::uint64_t vocab_size) {
    if (vocab_size > kMaxVocabSize) {
        throw Error(ErrorCode::InvalidArgument,
                    "vocab size " + std::to_string(vocab_size) + " exceeds the 32-bit id space");
    }
}

}  // namespace

TokenizedDataset::TokenizedDataset(const std::vector<std::vector<TokenId>>& sequences,
                                   std::uint64_t vocab_size)
    : vocab_size_(vocab_size) {
    check_vocab_size(vocab_size);
    std::size_t total = 0;
    for (const auto& seq : sequences) total += seq.size();
    tokens_.reserve(total);
    offsets_.reserve(sequences.size() + 1);
    for (const auto& seq : sequences) {
        tokens_.insert(tokens_.end(), seq.begin(), seq.end());
        offsets_.push_back(tokens_.size());
    }
    validate();
}

TokenizedDataset TokenizedDataset::from_flat(std::vector<TokenId> tokens,
                                             std::vector<std::size_t> offsets,
                                             std::uint64_t vocab_size) {
    check_vocab_size(vocab_size);
    if (offsets.empty() || offsets.front() != 0 || offsets.back() != tokens.size() ||
        !std::is_sorted(offsets.begin(), offsets.end())) {
        throw Error(ErrorCode::InvalidArgument, "malformed sequence offsets");
    }
    TokenizedDataset out;
    out.tokens_ = std::move(tokens);
    out.offsets_ = std::move(offsets);
    out.vocab_size_ = vocab_size;
    out.validate();
    return out;
}

void TokenizedDataset::validate() const {
    for (std::size_t s = 0; s + 1 < offsets_.size(); ++s) {
        for (std::size_t k = offsets_[s]; k < offsets_[s + 1]; ++k) {
            if (tokens_[k] >= vocab_size_) throw_out_of_range(s, k - offsets_[s], tokens_[k], vocab_size_);
        }
    }
}

std::span<const TokenId> TokenizedDataset::sequence(std::size_t index) const {
    if (index >= num_sequences()) {
        throw Error(ErrorCode::InvalidArgument, "sequence index " + std::to_string(index) + " out of range");
    }
    return std::span<const TokenId>(tokens_).subspan(offsets_[index], offsets_[index + 1] - offsets_[index]);
}

TokenizedDataset TokenizedDataset::slice(std::size_t first, std::size_t last) const {
    if (first > last || last > num_sequences()) {
        throw Error(ErrorCode::InvalidArgument, "invalid sequence range");
    }
    TokenizedDataset out;
    out.vocab_size_ = vocab_size_;
    out.tokens_.assign(tokens_.begin() + static_cast<std::ptrdiff_t>(offsets_[first]),
                       tokens_.begin() + static_cast<std::ptrdiff_t>(offsets_[last]));
    out.offsets_.clear();
    out.offsets_.reserve(last - first + 1);
    for (std::size_t s = first; s <= last; ++s) out.offsets_.push_back(offsets_[s] - offsets_[first]);
    return out;
}

std::vector<std::vector<TokenId>> TokenizedDataset::to_nested() const {
    std::vector<std::vector<TokenId>> out;
    out.reserve(num_sequences());
    for (std::size_t s = 0; s < num_sequences(); ++s) {
        auto seq = sequence(s);
        out.emplace_back(seq.begin(), seq.end());
    }
    return out;
}

FrequencyTable::FrequencyTable(std::uint64_t vocab_size) : counts_(vocab_size, 0) {}

FrequencyTable::FrequencyTable(std::vector<std::uint64_t> counts)
    : counts_(std::move(counts)),
      total_(std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0})) {}

std::uint64_t FrequencyTable::used_count() const noexcept {
    return static_cast<std::uint64_t>(
        std::count_if(counts_.begin(), counts_.end(), [](std::uint64_t c) { return c > 0; }));
}

std::vector<TokenId> FrequencyTable::used_tokens() const {
    std::vector<TokenId> out;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        if (counts_[i] > 0) out.push_back(static_cast<TokenId>(i));
    }
    return out;
}

FrequencyTable scan_dataset(const TokenizedDataset& dataset) {
    std::vector<std::uint64_t> counts(dataset.vocab_size(), 0);
    for (TokenId id : dataset.tokens()) ++counts[id];
    return FrequencyTable(std::move(counts));
}

FrequencyTable scan_dataset(const TokenizedDataset& dataset, std::size_t partitions) {
    if (partitions == 0) throw Error(ErrorCode::InvalidArgument, "partition count must be >= 1");
    const std::size_t m = dataset.num_sequences();
    partitions = std::min(partitions, std::max<std::size_t>(m, 1));
    if (partitions == 1) return scan_dataset(dataset);

    // Contiguous sequence ranges; the first (m % partitions) ranges get one extra.
    std::vector<FrequencyTable> parts(partitions);
    std::vector<std::thread> workers;
    workers.reserve(partitions);
    const std::size_t base = m / partitions;
    const std::size_t extra = m % partitions;
    std::size_t first = 0;
    for (std::size_t p = 0; p < partitions; ++p) {
        const std::size_t last = first + base + (p < extra ? 1 : 0);
        workers.emplace_back([&dataset, &parts, p, first, last] {
            const auto offsets = dataset.offsets();
            const auto ids = dataset.tokens().subspan(offsets[first], offsets[last] - offsets[first]);
            std::vector<std::uint64_t> counts(dataset.vocab_size(), 0);
            for (TokenId id : ids) ++counts[id];
            parts[p] = FrequencyTable(std::move(counts));
        });
        first = last;
    }
    for (auto& w : workers) w.join();
    return merge_frequency_tables(parts);
}

FrequencyTable merge_frequency_tables(std::span<const FrequencyTable> parts) {
    if (parts.empty()) return FrequencyTable{};
    const std::uint64_t vocab_size = parts.front().vocab_size();
    std::vector<std::uint64_t> counts(vocab_size, 0);
    for (std::size_t p = 0; p < parts.size(); ++p) {
        if (parts[p].vocab_size() != vocab_size) {
            throw Error(ErrorCode::VocabSizeMismatch,
                        "frequency table " + std::to_string(p) + " has vocab size " +
                            std::to_string(parts[p].vocab_size()) + ", expected " + std::to_string(vocab_size));
        }
        const auto src = parts[p].counts();
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += src[i];
    }
    return FrequencyTable(std::move(counts));
}

std::string_view to_string(Ordering ordering) noexcept {
    switch (ordering) {
        case Ordering::AscendingId: return "ascending_id";
        case Ordering::FrequencyDescending: return "frequency_descending";
    }
    return "ascending_id";
}

Ordering parse_ordering(std::string_view text) {
    if (text == "ascending_id") return Ordering::AscendingId;
    if (text == "frequency_descending") return Ordering::FrequencyDescending;
    throw Error(ErrorCode::InvalidArgument, "unknown ordering '" + std::string(text) +
                                                "' (expected ascending_id or frequency_descending)");
}

RemapTable RemapTable::from_inverse(std::uint64_t original_vocab_size, std::vector<TokenId> inverse,
                                    Ordering ordering, std::vector<TokenId> keep_tokens) {
    check_vocab_size(original_vocab_size);
    RemapTable out;
    out.original_vocab_size_ = original_vocab_size;
    out.ordering_ = ordering;
    out.forward_.assign(original_vocab_size, kUnmapped);
    for (std::size_t j = 0; j < inverse.size(); ++j) {
        const TokenId id = inverse[j];
        if (id >= original_vocab_size) {
            throw Error(ErrorCode::RemapInconsistent,
                        "remap entry " + std::to_string(j) + " references id " + std::to_string(id) +
                            " outside vocabulary of size " + std::to_string(original_vocab_size));
        }
        if (out.forward_[id] != kUnmapped) {
            throw Error(ErrorCode::RemapInconsistent, "original id " + std::to_string(id) + " mapped twice");
        }
        out.forward_[id] = static_cast<TokenId>(j);
    }
    std::sort(keep_tokens.begin(), keep_tokens.end());
    keep_tokens.erase(std::unique(keep_tokens.begin(), keep_tokens.end()), keep_tokens.end());
    for (TokenId k : keep_tokens) {
        if (k >= original_vocab_size || out.forward_[k] == kUnmapped) {
            throw Error(ErrorCode::RemapInconsistent,
                        "keep token " + std::to_string(k) + " is not in the remap domain");
        }
    }
    out.keep_tokens_ = std::move(keep_tokens);
    out.inverse_ = std::move(inverse);
    return out;
}

bool RemapTable::contains(TokenId original) const noexcept {
    return original < forward_.size() && forward_[original] != kUnmapped;
}

std::optional<TokenId> RemapTable::forward(TokenId original) const noexcept {
    if (!contains(original)) return std::nullopt;
    return forward_[original];
}

RemapTable build_remap(const FrequencyTable& freqs, Ordering ordering, std::span<const TokenId> keep_tokens) {
    const auto counts = freqs.counts();
    std::vector<bool> in_domain(counts.size(), false);
    for (std::size_t i = 0; i < counts.size(); ++i) in_domain[i] = counts[i] > 0;
    for (TokenId k : keep_tokens) {
        if (k >= counts.size()) {
            throw Error(ErrorCode::KeepTokenOutOfRange,
                        "keep token " + std::to_string(k) + " is outside vocabulary of size " +
                            std::to_string(counts.size()));
        }
        in_domain[k] = true;
    }

    std::vector<TokenId> inverse;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (in_domain[i]) inverse.push_back(static_cast<TokenId>(i));
    }
    if (ordering == Ordering::FrequencyDescending) {
        // `inverse` is already in ascending id order, so a stable sort by count
        // leaves ties in ascending id order.
        std::stable_sort(inverse.begin(), inverse.end(),
                         [&counts](TokenId a, TokenId b) { return counts[a] > counts[b]; });
    }
    return RemapTable::from_inverse(freqs.vocab_size(), std::move(inverse), ordering,
                                    std::vector<TokenId>(keep_tokens.begin(), keep_tokens.end()));
}

TokenizedDataset apply_remap(const TokenizedDataset& dataset, const RemapTable& remap) {
    const auto offsets = dataset.offsets();
    const auto ids = dataset.tokens();
    std::vector<TokenId> out(ids.size());
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
        for (std::size_t k = offsets[s]; k < offsets[s + 1]; ++k) {
            const auto mapped = remap.forward(ids[k]);
            if (!mapped) {
                throw Error(ErrorCode::UnmappedToken,
                            "token id " + std::to_string(ids[k]) + " at sequence " + std::to_string(s) +
                                ", position " + std::to_string(k - offsets[s]) +
                                " is not in the remap domain (remap built from a different corpus?)");
            }
            out[k] = *mapped;
        }
    }
    return TokenizedDataset::from_flat(std::move(out), std::vector<std::size_t>(offsets.begin(), offsets.end()), remap.size());
}

TokenizedDataset invert_remap(const TokenizedDataset& dataset, const RemapTable& remap) {
    const auto offsets = dataset.offsets();
    const auto ids = dataset.tokens();
    const auto inverse = remap.inverse();
    std::vector<TokenId> out(ids.size());
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
        for (std::size_t k = offsets[s]; k < offsets[s + 1]; ++k) {
            if (ids[k] >= inverse.size()) throw_out_of_range(s, k - offsets[s], ids[k], inverse.size());
            out[k] = inverse[ids[k]];
        }
    }
    return TokenizedDataset::from_flat(std::move(out), std::vector<std::size_t>(offsets.begin(), offsets.end()),
                                       remap.original_vocab_size());
}

}  // namespace dep
