#pragma once

// Partition-function isotropy: F(u) = sum_i exp(<u, w_i>) evaluated over the
// eigenvectors of W^T W, and I(W) = min F / max F. Everything is carried in
// the log domain; raw scores as small as 1e-174 show up on real models.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isoforge/matrix.hpp"
#include "isoforge/store.hpp"

namespace isoforge {

enum class SignMode {
  both_signs,       // evaluate u and -u for each eigenvector (2D directions)
  convention_signs  // one direction per eigenvector, canonical sign
};

std::string_view to_string(SignMode mode);
SignMode parse_sign_mode(std::string_view s);

struct IsotropyReport {
  double score = 0.0;  // exp(log_f_min - log_f_max)
  double log_f_min = 0.0;
  double log_f_max = 0.0;
  std::size_t n_directions = 0;
  SignMode sign_mode = SignMode::both_signs;

  /// log I(W); stays meaningful when `score` underflows to zero.
  double log_score() const noexcept { return log_f_min - log_f_max; }
};

/// log F(u). `u` must be unit length within 1e-8.
double partition_log(const Matrix& w, std::span<const double> u);
double partition_log(const EmbeddingStore& w, std::span<const double> u);

/// All D eigenvectors of W^T W as rows (right singular vectors of W, so
/// W^T W is never formed), each with canonical sign.
Matrix eigen_directions(const Matrix& w);

/// No centering happens here; centre first when the experiment calls for it.
IsotropyReport isotropy_score(const Matrix& w, SignMode mode = SignMode::both_signs);
IsotropyReport isotropy_score(const EmbeddingStore& w, SignMode mode = SignMode::both_signs);

std::vector<IsotropyReport> layer_sweep(std::span<const EmbeddingStore> layers,
                                        SignMode mode = SignMode::both_signs);

/// CSV with header `layer,log_f_min,log_f_max,score`.
std::string layer_sweep_csv(std::span<const IsotropyReport> reports);

/// Scientific notation, 3 significant digits (e.g. 5.02E-05), computed from
/// the log score so values below the double range still print.
std::string format_score(double log_score);

}  // namespace isoforge
