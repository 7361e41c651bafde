#pragma once

// Evaluation harnesses: STS Spearman, kNN structural-group purity,
// verb tense/sense distances and a 2-D PCA projection.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "isoforge/isotropy.hpp"
#include "isoforge/store.hpp"

namespace isoforge {

struct StsPair {
  std::int64_t sentence_a = 0;
  std::int64_t sentence_b = 0;
  double gold = 0.0;  // [0, 5]
};

struct StsDataset {
  std::vector<StsPair> pairs;
};

/// Reads `score<TAB>sentence_a<TAB>sentence_b` and resolves each sentence
/// text through the `id<TAB>text` mapping file. An optional header line
/// starting with "score" is skipped.
StsDataset load_sts(const std::filesystem::path& pairs_tsv,
                    const std::filesystem::path& mapping_tsv);

/// Rows per sentence id, in row order.
class SentenceIndex {
 public:
  explicit SentenceIndex(const EmbeddingStore& store);
  const std::vector<std::uint32_t>& rows(std::int64_t sentence_id) const;

 private:
  std::map<std::int64_t, std::vector<std::uint32_t>> rows_;
};

/// Mean of the sentence's token rows.
Vector sentence_embedding(const EmbeddingStore& store, std::int64_t sentence_id);

/// Spearman x 100 between per-pair cosine similarities and gold scores.
double eval_sts(const EmbeddingStore& store, const StsDataset& ds);

struct KnnOptions {
  /// Draw neighbours from every row carrying a group_id, not just
  /// occurrences of the target token.
  bool all_rows = false;
};

/// Percentage of each target occurrence's k nearest neighbours (Euclidean,
/// lower row index on ties) that share its group_id, averaged.
double knn_group_purity(const EmbeddingStore& store, const std::string& target_token,
                        std::size_t k_neighbors, const KnnOptions& options = {});

struct TenseBiasReport {
  double st_sm = 0.0;  // same tense, same sense
  double st_dm = 0.0;  // same tense, different sense
  double dt_sm = 0.0;  // different tense, same sense
  std::size_t n_verbs = 0;
  double isotropy = 0.0;  // I(W) of the analysed verb rows
  double log_isotropy = 0.0;
};

struct TenseBiasComparison {
  TenseBiasReport before;
  TenseBiasReport after;
};

struct TenseOptions {
  /// A lemma qualifies with at least two senses occurring this often.
  std::size_t min_sense_occurrences = 10;
};

TenseBiasReport tense_bias(const EmbeddingStore& store, const TenseOptions& options = {});

struct ProjectedPoint {
  double x = 0.0;
  double y = 0.0;
  std::uint64_t frequency = 0;
};

/// Coordinates on the top two principal components of the centred store.
std::vector<ProjectedPoint> project_2d(const EmbeddingStore& store);
std::string project_2d_csv(const std::vector<ProjectedPoint>& points);

}  // namespace isoforge
