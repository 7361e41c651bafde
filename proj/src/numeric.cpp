#include "isoforge/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/SVD>

#include "isoforge/diagnostics.hpp"
#include "isoforge/errors.hpp"
#include "isoforge/kernels.hpp"

namespace isoforge {

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw EmptyInputError("log_sum_exp of an empty sequence");
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericsError("log_sum_exp input is not finite");
  }
  return kernels::parallel::log_sum_exp(values);
}

Vector column_mean(const Matrix& m) {
  Vector mean = Vector::Zero(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) mean += m.row(i).transpose();
  return mean / static_cast<double>(m.rows());
}

Vector column_mean(const Matrix& m, std::span<const std::uint32_t> rows) {
  Vector mean = Vector::Zero(m.cols());
  for (auto i : rows) mean += m.row(i).transpose();
  return mean / static_cast<double>(rows.size());
}

Centered center_columns(const Matrix& m) {
  if (m.rows() < 1) throw EmptyInputError("center_columns needs at least one row");
  Centered out{m, column_mean(m)};
  out.centered.rowwise() -= out.mean.transpose();
  return out;
}

void canonicalize_sign(std::span<double> direction) {
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t j = 0; j < direction.size(); ++j) {
    if (std::abs(direction[j]) > best) {
      best = std::abs(direction[j]);
      arg = j;
    }
  }
  if (!direction.empty() && direction[arg] < 0) {
    for (double& v : direction) v = -v;
  }
}

PrincipalBasis principal_components(const Matrix& m, Eigen::Index count) {
  const Eigen::Index limit = std::min(m.rows(), m.cols());
  if (count < 1 || count > limit) {
    throw RankError("requested " + std::to_string(count) + " components from a " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + " matrix");
  }
  const Eigen::MatrixXd dense = m;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericsError("SVD did not converge");

  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    const double cutoff = kRankTolerance * s(0);
    while (rank < s.size() && s(rank) >= cutoff) ++rank;
  }
  const Eigen::Index keep = std::min(count, rank);
  if (keep < count) {
    warn("numeric rank " + std::to_string(rank) + " below requested " + std::to_string(count) +
         " components; keeping " + std::to_string(keep));
  }

  PrincipalBasis basis;
  basis.components.resize(keep, m.cols());
  basis.variances.resize(keep);
  for (Eigen::Index c = 0; c < keep; ++c) {
    basis.components.row(c) = svd.matrixV().col(c).transpose();
    canonicalize_sign(row_span(basis.components, c));
    basis.variances[c] = s(c) * s(c) / static_cast<double>(m.rows());
  }
  return basis;
}

void remove_components_inplace(std::span<double> row, const PrincipalBasis& basis) {
  // Two sweeps of modified Gram-Schmidt keep the residual orthogonal to
  // working precision even when most of the row lies in the basis span.
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (Eigen::Index c = 0; c < basis.size(); ++c) {
      auto comp = row_span(basis.components, c);
      double dot = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j) dot += comp[j] * row[j];
      for (std::size_t j = 0; j < row.size(); ++j) row[j] -= dot * comp[j];
    }
  }
}

Matrix remove_components(const Matrix& m, const PrincipalBasis& basis) {
  if (basis.size() == 0) return m;
  if (basis.dim() != m.cols()) {
    throw DimError("basis dimension " + std::to_string(basis.dim()) + " != matrix width " +
                   std::to_string(m.cols()));
  }
  Matrix out = m;
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < out.rows(); ++i) remove_components_inplace(row_span(out, i), basis);
  return out;
}

namespace {

void require_same_dim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimError("vector dimensions differ: " + std::to_string(a.size()) + " vs " +
                   std::to_string(b.size()));
  }
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroVectorError("cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_same_dim(x, y);
  if (x.size() < 2) throw DegenerateInputError("spearman needs at least two observations");
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateInputError("spearman of a constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace isoforge
