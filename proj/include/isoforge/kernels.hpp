#pragma once

// Hot loops, in two flavours.
//
// serial::   straightforward single-threaded reference implementations.
//            Tests compare the parallel kernels against these.
// parallel:: OpenMP versions used by the library. Every reduction follows a
//            fixed tree keyed to element index (blocks of kReductionBlock,
//            combined pairwise), so results are bit-identical for any
//            thread count.

#include <cstdint>
#include <span>
#include <vector>

#include "isoforge/matrix.hpp"

namespace isoforge {

/// Caps the worker count used by parallel:: kernels. n <= 0 restores the
/// OpenMP default.
void set_thread_count(int n);
int thread_count();

struct Assignment {
  std::vector<std::uint32_t> cluster;  // nearest centroid, lowest index on ties
  std::vector<double> sq_distance;     // squared distance to that centroid
};

namespace kernels {

inline constexpr std::size_t kReductionBlock = 256;

namespace serial {

/// Left-to-right sum.
double sum(std::span<const double> values);

/// log(sum(exp(v))) with max subtraction, left-to-right accumulation.
double log_sum_exp(std::span<const double> values);

/// log F(u) = log sum_i exp(<u, w_i>) for every row u of `directions`.
/// With `negated`, also returns log F(-u) in the second half.
std::vector<double> partition_logs(const Matrix& w, const Matrix& directions, bool negated);

Assignment assign_nearest(const Matrix& points, const Matrix& centroids);

/// Squared Euclidean distances, rows of `queries` against rows of `points`.
Matrix cross_sq_distances(const Matrix& queries, const Matrix& points);

}  // namespace serial

namespace parallel {

/// Fixed-shape pairwise sum (see header comment).
double sum(std::span<const double> values);

double log_sum_exp(std::span<const double> values);

std::vector<double> partition_logs(const Matrix& w, const Matrix& directions, bool negated);

Assignment assign_nearest(const Matrix& points, const Matrix& centroids);

Matrix cross_sq_distances(const Matrix& queries, const Matrix& points);

}  // namespace parallel
}  // namespace kernels
}  // namespace isoforge
