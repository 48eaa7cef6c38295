#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dep {

using TokenId = std::uint32_t;

// Largest vocabulary representable with 32-bit token ids.
inline constexpr std::uint64_t kMaxVocabSize = std::uint64_t{1} << 32;

// Ragged token-id sequences with a declared vocabulary size. Stored as one
// flat id buffer plus sequence offsets. Every id is checked against
// vocab_size on construction, so a constructed dataset is always valid.
class TokenizedDataset {
public:
    TokenizedDataset() = default;
    TokenizedDataset(const std::vector<std::vector<TokenId>>& sequences, std::uint64_t vocab_size);

    // `offsets` has num_sequences + 1 entries, starts at 0, is non-decreasing
    // and ends at tokens.size().
    static TokenizedDataset from_flat(std::vector<TokenId> tokens, std::vector<std::size_t> offsets,
                                      std::uint64_t vocab_size);

    std::uint64_t vocab_size() const noexcept { return vocab_size_; }
    std::size_t num_sequences() const noexcept { return offsets_.size() - 1; }
    std::size_t total_tokens() const noexcept { return tokens_.size(); }
    bool empty() const noexcept { return num_sequences() == 0; }

    std::span<const TokenId> sequence(std::size_t index) const;
    std::span<const TokenId> tokens() const noexcept { return tokens_; }
    std::span<const std::size_t> offsets() const noexcept { return offsets_; }

    // Sequences [first, last) as a standalone dataset with the same vocab size.
    TokenizedDataset slice(std::size_t first, std::size_t last) const;

    std::vector<std::vector<TokenId>> to_nested() const;

    bool operator==(const TokenizedDataset&) const = default;

private:
    void validate() const;

    std::vector<TokenId> tokens_;
    std::vector<std::size_t> offsets_{0};
    std::uint64_t vocab_size_ = 0;
};

// Occurrence count of every vocabulary id over a corpus.
class FrequencyTable {
public:
    FrequencyTable() = default;
    explicit FrequencyTable(std::uint64_t vocab_size);
    explicit FrequencyTable(std::vector<std::uint64_t> counts);

    std::uint64_t vocab_size() const noexcept { return counts_.size(); }
    std::uint64_t total_tokens() const noexcept { return total_; }
    std::uint64_t count(TokenId id) const { return counts_.at(id); }
    std::span<const std::uint64_t> counts() const noexcept { return counts_; }

    // |V'|: number of ids with a non-zero count.
    std::uint64_t used_count() const noexcept;
    // V' in ascending id order.
    std::vector<TokenId> used_tokens() const;

    bool operator==(const FrequencyTable&) const = default;

private:
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

FrequencyTable scan_dataset(const TokenizedDataset& dataset);

// Splits the sequences into `partitions` contiguous ranges, scans them on
// separate threads and merges the partial tables. The result is identical to
// scan_dataset(dataset) for every partition count >= 1.
FrequencyTable scan_dataset(const TokenizedDataset& dataset, std::size_t partitions);

// Elementwise sum. Throws VocabSizeMismatch if the parts disagree on vocab
// size. An empty list yields an empty (vocab 0) table.
FrequencyTable merge_frequency_tables(std::span<const FrequencyTable> parts);

enum class Ordering {
    AscendingId,
    FrequencyDescending,
};

std::string_view to_string(Ordering ordering) noexcept;
// Accepts "ascending_id" / "frequency_descending". Throws InvalidArgument.
Ordering parse_ordering(std::string_view text);

// Bijection between the reduced vocabulary V' (plus keep tokens) in the
// original id space and the dense range 0..size()-1.
class RemapTable {
public:
    static constexpr TokenId kUnmapped = std::numeric_limits<TokenId>::max();

    RemapTable() = default;

    // Builds the table from its inverse: inverse[j] is the original id that
    // maps to dense id j. Throws RemapInconsistent on duplicates or on ids
    // >= original_vocab_size.
    static RemapTable from_inverse(std::uint64_t original_vocab_size, std::vector<TokenId> inverse,
                                   Ordering ordering = Ordering::AscendingId,
                                   std::vector<TokenId> keep_tokens = {});

    std::uint64_t original_vocab_size() const noexcept { return original_vocab_size_; }
    // |domain(forward)|, the reduced vocabulary size.
    std::uint64_t size() const noexcept { return inverse_.size(); }
    Ordering ordering() const noexcept { return ordering_; }
    std::span<const TokenId> keep_tokens() const noexcept { return keep_tokens_; }
    std::span<const TokenId> inverse() const noexcept { return inverse_; }

    bool contains(TokenId original) const noexcept;
    std::optional<TokenId> forward(TokenId original) const noexcept;
    TokenId inverse(TokenId dense) const { return inverse_.at(dense); }

    bool operator==(const RemapTable&) const = default;

private:
    std::uint64_t original_vocab_size_ = 0;
    Ordering ordering_ = Ordering::AscendingId;
    std::vector<TokenId> keep_tokens_;
    std::vector<TokenId> forward_;
    std::vector<TokenId> inverse_;
};

// Domain is V' ∪ keep_tokens. AscendingId assigns dense ids in increasing
// original-id order; FrequencyDescending by decreasing count, ties broken by
// ascending original id.
RemapTable build_remap(const FrequencyTable& freqs, Ordering ordering = Ordering::AscendingId,
                       std::span<const TokenId> keep_tokens = {});

// D'[i][j] = forward(D[i][j]). Output vocab size is remap.size().
TokenizedDataset apply_remap(const TokenizedDataset& dataset, const RemapTable& remap);

// Inverse of apply_remap; output vocab size is remap.original_vocab_size().
TokenizedDataset invert_remap(const TokenizedDataset& dataset, const RemapTable& remap);

}  // namespace dep
