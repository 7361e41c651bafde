#include "isoforge/isotropy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include <Eigen/SVD>

#include "isoforge/diagnostics.hpp"
#include "isoforge/errors.hpp"
#include "isoforge/kernels.hpp"
#include "isoforge/numeric.hpp"

namespace isoforge {

std::string_view to_string(SignMode mode) {
  return mode == SignMode::both_signs ? "both" : "convention";
}

SignMode parse_sign_mode(std::string_view s) {
  if (s == "both" || s == "both_signs") return SignMode::both_signs;
  if (s == "convention" || s == "convention_signs") return SignMode::convention_signs;
  throw ValueError("unknown sign mode '" + std::string(s) + "'");
}

double partition_log(const Matrix& w, std::span<const double> u) {
  if (static_cast<Eigen::Index>(u.size()) != w.cols()) {
    throw DimError("direction has " + std::to_string(u.size()) + " entries, store has dim " +
                   std::to_string(w.cols()));
  }
  double norm2 = 0.0;
  for (double v : u) norm2 += v * v;
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-8) throw NormError("direction is not unit length");
  Matrix dir(1, w.cols());
  std::copy(u.begin(), u.end(), dir.data());
  return kernels::parallel::partition_logs(w, dir, false)[0];
}

double partition_log(const EmbeddingStore& w, std::span<const double> u) {
  return partition_log(w.to_matrix(), u);
}

Matrix eigen_directions(const Matrix& w) {
  const Eigen::MatrixXd dense = w;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw NumericsError("SVD did not converge");
  Matrix dirs = svd.matrixV().transpose();
  for (Eigen::Index c = 0; c < dirs.rows(); ++c) canonicalize_sign(row_span(dirs, c));
  return dirs;
}

IsotropyReport isotropy_score(const Matrix& w, SignMode mode) {
  if (w.rows() < 2) throw CardinalityError("isotropy needs at least two rows");
  if (w.cols() > w.rows()) {
    warn("dim " + std::to_string(w.cols()) + " exceeds row count " + std::to_string(w.rows()) +
         "; W^T W is rank deficient");
  }
  const Matrix dirs = eigen_directions(w);
  const auto logs =
      kernels::parallel::partition_logs(w, dirs, mode == SignMode::both_signs);
  for (double v : logs) {
    if (!std::isfinite(v)) throw NumericsError("partition function is not finite");
  }
  const auto [lo, hi] = std::minmax_element(logs.begin(), logs.end());
  IsotropyReport r;
  r.log_f_min = *lo;
  r.log_f_max = *hi;
  r.score = std::exp(r.log_f_min - r.log_f_max);
  r.n_directions = logs.size();
  r.sign_mode = mode;
  return r;
}

IsotropyReport isotropy_score(const EmbeddingStore& w, SignMode mode) {
  return isotropy_score(w.to_matrix(), mode);
}

std::vector<IsotropyReport> layer_sweep(std::span<const EmbeddingStore> layers, SignMode mode) {
  if (layers.empty()) throw EmptyInputError("layer sweep over zero layers");
  const auto dim = layers.front().dim();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].dim() != dim) {
      throw DimError("layer " + std::to_string(i) + " has dim " +
                     std::to_string(layers[i].dim()) + ", layer 0 has " + std::to_string(dim));
    }
  }
  std::vector<IsotropyReport> out;
  out.reserve(layers.size());
  for (const auto& layer : layers) out.push_back(isotropy_score(layer, mode));
  return out;
}

std::string format_score(double log_score) {
  const double l10 = log_score / std::numbers::ln10;
  int exponent = static_cast<int>(std::floor(l10));
  double mantissa = std::pow(10.0, l10 - exponent);
  if (std::round(mantissa * 100.0) >= 1000.0) {
    mantissa /= 10.0;
    ++exponent;
  }
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2fE%c%02d", mantissa, exponent < 0 ? '-' : '+',
                std::abs(exponent));
  return buf;
}

std::string layer_sweep_csv(std::span<const IsotropyReport> reports) {
  std::ostringstream out;
  out << "layer,log_f_min,log_f_max,score\n";
  char buf[128];
  for (std::size_t i = 0; i < reports.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,", i, reports[i].log_f_min,
                  reports[i].log_f_max);
    out << buf << format_score(reports[i].log_score()) << '\n';
  }
  return out.str();
}

}  // namespace isoforge
