#include "dep/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "dep/error.hpp"

namespace dep {

namespace {

std::string shape_str(std::uint64_t rows, std::uint64_t dim) {
    return std::to_string(rows) + "x" + std::to_string(dim);
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::uint64_t rows, std::uint64_t dim)
    : EmbeddingMatrix(rows, dim, std::vector<float>(rows * dim, 0.0f)) {}

EmbeddingMatrix::EmbeddingMatrix(std::uint64_t rows, std::uint64_t dim, std::vector<float> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
    if (dim == 0) throw Error(ErrorCode::ShapeMismatch, "embedding dim must be >= 1");
    if (data_.size() != rows * dim) {
        throw Error(ErrorCode::ShapeMismatch, "embedding data has " + std::to_string(data_.size()) +
                                                  " values, expected " + shape_str(rows, dim));
    }
}

std::span<const float> EmbeddingMatrix::row(std::uint64_t index) const {
    if (index >= rows_) throw Error(ErrorCode::ShapeMismatch, "row " + std::to_string(index) + " out of range");
    return std::span<const float>(data_).subspan(index * dim_, dim_);
}

std::span<float> EmbeddingMatrix::row(std::uint64_t index) {
    if (index >= rows_) throw Error(ErrorCode::ShapeMismatch, "row " + std::to_string(index) + " out of range");
    return std::span<float>(data_).subspan(index * dim_, dim_);
}

bool bit_identical(const EmbeddingMatrix& a, const EmbeddingMatrix& b) noexcept {
    if (a.rows() != b.rows() || a.dim() != b.dim()) return false;
    const auto da = a.data();
    const auto db = b.data();
    return da.empty() || std::memcmp(da.data(), db.data(), da.size_bytes()) == 0;
}

EmbeddingMatrix prune_embeddings(const EmbeddingMatrix& matrix, const RemapTable& remap) {
    if (matrix.rows() != remap.original_vocab_size()) {
        throw Error(ErrorCode::ShapeMismatch,
                    "embedding matrix has " + std::to_string(matrix.rows()) + " rows but remap expects " +
                        std::to_string(remap.original_vocab_size()));
    }
    const std::uint64_t dim = matrix.dim();
    EmbeddingMatrix out(remap.size(), dim);
    const float* src = matrix.data().data();
    float* dst = out.data().data();
    const auto inverse = remap.inverse();
    for (std::size_t j = 0; j < inverse.size(); ++j) {
        std::memcpy(dst + j * dim, src + std::uint64_t{inverse[j]} * dim, dim * sizeof(float));
    }
    return out;
}

EmbeddingMatrix restore_embeddings(const EmbeddingMatrix& original, const EmbeddingMatrix& learned,
                                   const RemapTable& remap) {
    if (original.rows() != remap.original_vocab_size()) {
        throw Error(ErrorCode::ShapeMismatch,
                    "original matrix has " + std::to_string(original.rows()) + " rows but remap expects " +
                        std::to_string(remap.original_vocab_size()));
    }
    if (learned.rows() != remap.size()) {
        throw Error(ErrorCode::ShapeMismatch, "learned matrix has " + std::to_string(learned.rows()) +
                                                  " rows but remap has " + std::to_string(remap.size()) +
                                                  " entries");
    }
    if (learned.dim() != original.dim()) {
        throw Error(ErrorCode::ShapeMismatch, "dimension mismatch: original " +
                                                  shape_str(original.rows(), original.dim()) + ", learned " +
                                                  shape_str(learned.rows(), learned.dim()));
    }
    const std::uint64_t dim = original.dim();
    EmbeddingMatrix out = original;
    const float* src = learned.data().data();
    float* dst = out.data().data();
    const auto inverse = remap.inverse();
    for (std::size_t j = 0; j < inverse.size(); ++j) {
        std::memcpy(dst + std::uint64_t{inverse[j]} * dim, src + j * dim, dim * sizeof(float));
    }
    return out;
}

ValidationSummary validate_matrix(const EmbeddingMatrix& matrix) {
    ValidationSummary summary;
    summary.rows = matrix.rows();
    summary.dim = matrix.dim();
    for (float v : matrix.data()) {
        if (!std::isfinite(v)) {
            ++summary.non_finite;
            continue;
        }
        if (!summary.min || v < *summary.min) summary.min = v;
        if (!summary.max || v > *summary.max) summary.max = v;
    }
    return summary;
}

}  // namespace dep
