#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "isoforge/matrix.hpp"

namespace isoforge {

/// Top principal directions of a (centered) matrix.
struct PrincipalBasis {
  Matrix components;              // m x D, orthonormal rows, descending variance
  std::vector<double> variances;  // singular value^2 / n, non-increasing

  Eigen::Index size() const noexcept { return components.rows(); }
  Eigen::Index dim() const noexcept { return components.cols(); }
  bool operator==(const PrincipalBasis& other) const {
    return components == other.components && variances == other.variances;
  }
};

/// Singular values below this fraction of the largest count as zero.
inline constexpr double kRankTolerance = 1e-10;

double log_sum_exp(std::span<const double> values);

struct Centered {
  Matrix centered;
  Vector mean;
};

/// Column means accumulated in row order. Shared by centering, k-means
/// updates and per-cluster means so all of them agree bit for bit.
Vector column_mean(const Matrix& m);
Vector column_mean(const Matrix& m, std::span<const std::uint32_t> rows);

Centered center_columns(const Matrix& m);

/// Top-m right singular directions of `m` (thin SVD). Requires
/// 1 <= count <= min(n, d). When the numeric rank r < count, returns r
/// components and emits a warning.
PrincipalBasis principal_components(const Matrix& m, Eigen::Index count);

/// Flips a direction so its largest-magnitude coordinate is positive
/// (first such coordinate on ties).
void canonicalize_sign(std::span<double> direction);

/// Projects every row onto the orthogonal complement of the basis.
Matrix remove_components(const Matrix& m, const PrincipalBasis& basis);
void remove_components_inplace(std::span<double> row, const PrincipalBasis& basis);

double cosine_similarity(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Fractional ranks (1-based, ties averaged).
std::vector<double> fractional_ranks(std::span<const double> values);

/// Pearson correlation of fractional ranks.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace isoforge
