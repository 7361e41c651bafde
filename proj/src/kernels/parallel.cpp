#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "isoforge/errors.hpp"
#include "isoforge/kernels.hpp"

namespace isoforge {

void set_thread_count(int n) {
  omp_set_num_threads(n > 0 ? n : omp_get_num_procs());
}

int thread_count() { return omp_get_max_threads(); }

namespace kernels::parallel {
namespace {

constexpr Eigen::Index kDirectionBlock = 64;

// Sequential sum within each block, then a pairwise tree over the block
// partials. The shape depends only on the input length.
double tree_reduce(std::vector<double>& partials) {
  if (partials.empty()) return 0.0;
  std::size_t width = partials.size();
  while (width > 1) {
    const std::size_t half = (width + 1) / 2;
    for (std::size_t i = 0; i + half < width; ++i) partials[i] += partials[i + half];
    width = half;
  }
  return partials[0];
}

double block_sum(std::span<const double> values, std::size_t block) {
  const std::size_t lo = block * kReductionBlock;
  const std::size_t hi = std::min(values.size(), lo + kReductionBlock);
  double acc = 0.0;
  for (std::size_t i = lo; i < hi; ++i) acc += values[i];
  return acc;
}

std::size_t block_count(std::size_t n) { return (n + kReductionBlock - 1) / kReductionBlock; }

// Single-threaded version of the same tree, for use inside parallel regions.
double fixed_sum(std::span<const double> values) {
  std::vector<double> partials(block_count(values.size()));
  for (std::size_t b = 0; b < partials.size(); ++b) partials[b] = block_sum(values, b);
  return tree_reduce(partials);
}

double fixed_log_sum_exp(std::span<const double> values, std::vector<double>& scratch) {
  const double hi = *std::max_element(values.begin(), values.end());
  scratch.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) scratch[i] = std::exp(values[i] - hi);
  return hi + std::log(fixed_sum(scratch));
}

}  // namespace

double sum(std::span<const double> values) {
  std::vector<double> partials(block_count(values.size()));
  const auto nb = static_cast<std::int64_t>(partials.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < nb; ++b) partials[b] = block_sum(values, b);
  return tree_reduce(partials);
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw EmptyInputError("log_sum_exp of an empty sequence");
  const double hi = *std::max_element(values.begin(), values.end());
  std::vector<double> shifted(values.size());
  const auto n = static_cast<std::int64_t>(values.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) shifted[i] = std::exp(values[i] - hi);
  return hi + std::log(sum(shifted));
}

std::vector<double> partition_logs(const Matrix& w, const Matrix& directions, bool negated) {
  const auto m = directions.rows();
  std::vector<double> out(negated ? 2 * m : m);
  if (w.rows() == 0) throw EmptyInputError("partition function over an empty matrix");
  const auto blocks = static_cast<std::int64_t>((m + kDirectionBlock - 1) / kDirectionBlock);

#pragma omp parallel
  {
    std::vector<double> column(w.rows());
    std::vector<double> scratch;
#pragma omp for schedule(dynamic, 1)
    for (std::int64_t b = 0; b < blocks; ++b) {
      const Eigen::Index lo = b * kDirectionBlock;
      const Eigen::Index width = std::min(kDirectionBlock, m - lo);
      // Column-major so each direction's projections are contiguous.
      const Eigen::MatrixXd z = w * directions.middleRows(lo, width).transpose();
      for (Eigen::Index c = 0; c < width; ++c) {
        std::span<const double> col(z.data() + c * z.rows(), static_cast<std::size_t>(z.rows()));
        out[lo + c] = fixed_log_sum_exp(col, scratch);
        if (negated) {
          for (std::size_t i = 0; i < col.size(); ++i) column[i] = -col[i];
          out[m + lo + c] = fixed_log_sum_exp(column, scratch);
        }
      }
    }
  }
  return out;
}

Assignment assign_nearest(const Matrix& points, const Matrix& centroids) {
  const auto n = points.rows();
  const auto k = centroids.rows();
  const auto d = points.cols();
  Assignment a;
  a.cluster.resize(n);
  a.sq_distance.resize(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_c = 0;
    for (Eigen::Index c = 0; c < k; ++c) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double diff = points(i, j) - centroids(c, j);
        acc += diff * diff;
      }
      if (acc < best) {
        best = acc;
        best_c = static_cast<std::uint32_t>(c);
      }
    }
    a.cluster[i] = best_c;
    a.sq_distance[i] = best;
  }
  return a;
}

Matrix cross_sq_distances(const Matrix& queries, const Matrix& points) {
  Matrix out(queries.rows(), points.rows());
  const auto d = queries.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    for (Eigen::Index p = 0; p < points.rows(); ++p) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double diff = queries(q, j) - points(p, j);
        acc += diff * diff;
      }
      out(q, p) = acc;
    }
  }
  return out;
}

}  // namespace kernels::parallel
}  // namespace isoforge
