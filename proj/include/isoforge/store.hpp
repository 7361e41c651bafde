#pragma once

// Embedding matrix files (ISOF) and their JSONL metadata sidecars.
//
// Matrix layout, all little-endian:
//   "ISOF" 0x01 | u32 N | u32 D | N*D float32, row-major
// Sidecar: <matrix path>.meta.jsonl, one JSON object per row.
// A headerless file with a .tsv extension is read as tab-separated reals.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isoforge/matrix.hpp"

namespace isoforge {

enum class Tense : std::uint8_t { past, present, other };

std::string_view to_string(Tense t);
std::optional<Tense> parse_tense(std::string_view s);

struct TokenMeta {
  std::string token;
  std::int64_t sentence_id = 0;
  std::int64_t position = 0;
  std::optional<std::string> lemma;
  std::optional<Tense> tense;
  std::optional<std::string> sense_id;
  std::optional<std::int64_t> group_id;  // structural group
  std::optional<std::uint64_t> frequency;

  bool operator==(const TokenMeta&) const = default;
};

/// N x D token-occurrence embeddings stored as float32, plus optional
/// per-row metadata. Immutable once constructed; the constructor enforces
/// every invariant (shape, finiteness, metadata alignment and uniqueness).
class EmbeddingStore {
 public:
  EmbeddingStore(std::size_t n_rows, std::size_t dim, std::vector<float> data,
                 std::optional<std::vector<TokenMeta>> meta = std::nullopt);

  /// Rounds to float32; throws ValueError if any value becomes non-finite.
  static EmbeddingStore from_matrix(const Matrix& m,
                                    std::optional<std::vector<TokenMeta>> meta = std::nullopt);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(data_).subspan(i * dim_, dim_);
  }
  bool has_meta() const noexcept { return meta_.has_value(); }
  const std::optional<std::vector<TokenMeta>>& meta() const noexcept { return meta_; }

  /// Widened copy for 64-bit computation.
  Matrix to_matrix() const;

  bool operator==(const EmbeddingStore&) const = default;

 private:
  std::size_t n_rows_;
  std::size_t dim_;
  std::vector<float> data_;
  std::optional<std::vector<TokenMeta>> meta_;
};

std::filesystem::path sidecar_path(const std::filesystem::path& matrix_path);

EmbeddingStore load_store(const std::filesystem::path& path);

/// Writes the matrix and (when metadata is present) the sidecar atomically.
/// A stale sidecar next to a metadata-free store is removed.
void save_store(const EmbeddingStore& store, const std::filesystem::path& path);

/// Serialized forms, exposed for tests and fingerprinting.
std::string encode_matrix(const EmbeddingStore& store);
std::string encode_sidecar(const std::vector<TokenMeta>& meta);

using RowPredicate = std::function<bool(const TokenMeta&)>;

/// Rows whose metadata satisfies `keep`, original order preserved.
EmbeddingStore filter_rows(const EmbeddingStore& store, const RowPredicate& keep);

}  // namespace isoforge
