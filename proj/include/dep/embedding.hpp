#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dep/vocab.hpp"

namespace dep {

// Row-major rows x dim matrix of 32-bit floats; one row per vocabulary id.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    // Zero-filled. Throws ShapeMismatch if dim == 0.
    EmbeddingMatrix(std::uint64_t rows, std::uint64_t dim);
    // Throws ShapeMismatch unless data.size() == rows * dim and dim >= 1.
    EmbeddingMatrix(std::uint64_t rows, std::uint64_t dim, std::vector<float> data);

    std::uint64_t rows() const noexcept { return rows_; }
    std::uint64_t dim() const noexcept { return dim_; }
    std::uint64_t byte_size() const noexcept { return rows_ * dim_ * sizeof(float); }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }
    std::span<const float> row(std::uint64_t index) const;
    std::span<float> row(std::uint64_t index);

private:
    std::uint64_t rows_ = 0;
    std::uint64_t dim_ = 1;
    std::vector<float> data_;
};

// Same shape and identical bit patterns (NaN payloads included).
bool bit_identical(const EmbeddingMatrix& a, const EmbeddingMatrix& b) noexcept;

// E'[forward(i)] = E[i] for every i in the remap domain. Bit-exact copies.
EmbeddingMatrix prune_embeddings(const EmbeddingMatrix& matrix, const RemapTable& remap);

// Copy of `original` with row inverse(j) replaced by learned row j. Rows
// outside the remap domain are left untouched.
EmbeddingMatrix restore_embeddings(const EmbeddingMatrix& original, const EmbeddingMatrix& learned,
                                   const RemapTable& remap);

struct ValidationSummary {
    std::uint64_t rows = 0;
    std::uint64_t dim = 0;
    std::uint64_t non_finite = 0;
    // Over finite entries only; empty when there are none.
    std::optional<float> min;
    std::optional<float> max;
};

ValidationSummary validate_matrix(const EmbeddingMatrix& matrix);

}  // namespace dep
