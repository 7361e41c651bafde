#include <algorithm>
#include <cmath>
#include <limits>

#include "isoforge/errors.hpp"
#include "isoforge/kernels.hpp"

namespace isoforge::kernels::serial {

double sum(std::span<const double> values) {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw EmptyInputError("log_sum_exp of an empty sequence");
  const double hi = *std::max_element(values.begin(), values.end());
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

std::vector<double> partition_logs(const Matrix& w, const Matrix& directions, bool negated) {
  const auto n = w.rows();
  const auto d = w.cols();
  const auto m = directions.rows();
  std::vector<double> out(negated ? 2 * m : m);
  std::vector<double> dots(n), neg(n);
  for (Eigen::Index c = 0; c < m; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) acc += directions(c, j) * w(i, j);
      dots[i] = acc;
      neg[i] = -acc;
    }
    out[c] = log_sum_exp(dots);
    if (negated) out[m + c] = log_sum_exp(neg);
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

}  // namespace isoforge::kernels::serial
