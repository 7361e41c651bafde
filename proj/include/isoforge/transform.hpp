#pragma once

// Isotropy enhancement by dominant-direction removal.
//
// Global: centre the whole space, drop its top-m principal components.
// Cluster-based: k-means the space, centre each cluster on its own mean and
// drop that cluster's own top-m components. The mean is not added back.
//
// ISOT1 file, little-endian:
//   "ISOT1" | u8 kind | u32 k | u32 D | u32 m_requested | u64 seed |
//   u64 fit_fingerprint | ISOK1 block | k*D f64 means |
//   per cluster: u32 count, count f64 variances, count*D f64 components

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "isoforge/clustering.hpp"
#include "isoforge/numeric.hpp"
#include "isoforge/store.hpp"

namespace isoforge {

enum class TransformKind : std::uint8_t { global = 0, cluster_based = 1 };

struct FittedTransform {
  TransformKind kind = TransformKind::global;
  ClusterModel clusters;
  Matrix cluster_means;                // k x D
  std::vector<PrincipalBasis> bases;   // one per cluster, each <= m_requested rows
  std::uint32_t m_requested = 0;
  std::uint64_t fit_fingerprint = 0;

  std::uint32_t k() const noexcept { return clusters.k; }
  Eigen::Index dim() const noexcept { return cluster_means.cols(); }
  bool operator==(const FittedTransform&) const = default;
};

struct ClusterFitOptions {
  /// Per-cluster override of m, keyed by cluster index. Empty means uniform.
  std::map<std::uint32_t, std::uint32_t> m_overrides;
  KMeansOptions kmeans;
};

/// Hash of a fitting matrix (shape + values), used to detect stale transforms.
std::uint64_t matrix_fingerprint(const Matrix& w);

FittedTransform fit_global(const Matrix& w, std::uint32_t m);
FittedTransform fit_global(const EmbeddingStore& w, std::uint32_t m);

FittedTransform fit_cluster_based(const Matrix& w, std::uint32_t k, std::uint32_t m,
                                  std::uint64_t seed, const ClusterFitOptions& options = {});
FittedTransform fit_cluster_based(const EmbeddingStore& w, std::uint32_t k, std::uint32_t m,
                                  std::uint64_t seed, const ClusterFitOptions& options = {});

/// Assigns each row to its nearest centroid, subtracts that cluster's mean
/// and projects out that cluster's components. Works on held-out rows too.
Matrix apply(const FittedTransform& t, const Matrix& w);

/// Same, rounded back to float32; metadata passes through.
EmbeddingStore apply(const FittedTransform& t, const EmbeddingStore& w);

bool fitted_on(const FittedTransform& t, const Matrix& w);

std::string encode_transform(const FittedTransform& t);
FittedTransform decode_transform(std::string_view bytes);
void save_transform(const FittedTransform& t, const std::filesystem::path& path);
FittedTransform load_transform(const std::filesystem::path& path);

/// Defaults tuned per model family on the STS-B dev set.
struct ModelDefaults {
  std::uint32_t clusters;
  std::uint32_t cluster_pcs;
  std::uint32_t global_pcs;
};
ModelDefaults model_defaults(std::string_view model);

}  // namespace isoforge
