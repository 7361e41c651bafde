#pragma once

// Seeded k-means (k-means++ init, Lloyd iterations) and the local isotropy
// assessment built on it.
//
// ISOK1 block, little-endian:
//   "ISOK1" | u32 k | u32 D | u32 N | u64 seed | u32 iterations_run |
//   f64 objective | k*D f64 centroids (row-major) | N u32 assignments

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "isoforge/binary_io.hpp"
#include "isoforge/isotropy.hpp"
#include "isoforge/matrix.hpp"

namespace isoforge {

struct ClusterModel {
  std::uint32_t k = 0;
  Matrix centroids;                       // k x D
  std::vector<std::uint32_t> assignments; // per fitted row
  double objective = 0.0;                 // within-cluster sum of squares
  std::uint64_t seed = 0;
  std::uint32_t iterations_run = 0;

  bool operator==(const ClusterModel&) const = default;
};

struct KMeansOptions {
  std::uint32_t max_iterations = 300;
  double relative_tolerance = 1e-4;
};

/// 64-bit Mersenne Twister (std::mt19937_64) turned into doubles in [0, 1)
/// by taking the top 53 bits, so draws are identical on every platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);
  double uniform();
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

ClusterModel kmeans_fit(const Matrix& w, std::uint32_t k, std::uint64_t seed,
                        const KMeansOptions& options = {});

/// Nearest centroid, lowest index on exact ties.
std::uint32_t kmeans_assign(const ClusterModel& model, std::span<const double> x);

/// Per-cluster means from an assignment vector, k x D.
Matrix cluster_means(const Matrix& w, std::span<const std::uint32_t> assignments,
                     std::uint32_t k);

/// Row indices per cluster, ascending.
std::vector<std::vector<std::uint32_t>> cluster_members(std::span<const std::uint32_t> assignments,
                                                        std::uint32_t k);

/// Fit k-means, subtract each cluster's own mean, keep row order, score.
IsotropyReport local_isotropy(const Matrix& w, std::uint32_t k, std::uint64_t seed,
                              SignMode mode = SignMode::both_signs);

void write_cluster_model(io::ByteWriter& out, const ClusterModel& model);
ClusterModel read_cluster_model(io::ByteReader& in);

void save_cluster_model(const ClusterModel& model, const std::filesystem::path& path);
ClusterModel load_cluster_model(const std::filesystem::path& path);

}  // namespace isoforge
