#include "isoforge/transform.hpp"

#include <string>

#include "isoforge/binary_io.hpp"
#include "isoforge/diagnostics.hpp"
#include "isoforge/errors.hpp"
#include "isoforge/kernels.hpp"

namespace isoforge {
namespace {

constexpr std::string_view kMagic = "ISOT1";

void check_m(std::uint32_t m, Eigen::Index dim) {
  if (m < 1 || m > dim) {
    throw RankError("m = " + std::to_string(m) + " must lie in [1, " + std::to_string(dim) + "]");
  }
}

Matrix gather_centered(const Matrix& w, std::span<const std::uint32_t> rows, const Vector& mean) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), w.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = w.row(rows[r]) - mean.transpose();
  }
  return out;
}

}  // namespace

std::uint64_t matrix_fingerprint(const Matrix& w) {
  io::ByteWriter bytes;
  bytes.u64(static_cast<std::uint64_t>(w.rows()));
  bytes.u64(static_cast<std::uint64_t>(w.cols()));
  for (Eigen::Index i = 0; i < w.size(); ++i) bytes.f64(w.data()[i]);
  return io::fnv1a64(bytes.buffer());
}

FittedTransform fit_global(const Matrix& w, std::uint32_t m) {
  check_m(m, w.cols());
  std::vector<std::uint32_t> all(static_cast<std::size_t>(w.rows()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);

  FittedTransform t;
  t.kind = TransformKind::global;
  t.m_requested = m;
  t.fit_fingerprint = matrix_fingerprint(w);
  t.cluster_means = column_mean(w, all).transpose();

  const Matrix centered = gather_centered(w, all, t.cluster_means.row(0).transpose());
  std::vector<double> sq(static_cast<std::size_t>(w.rows()));
  for (Eigen::Index i = 0; i < centered.rows(); ++i) sq[i] = centered.row(i).squaredNorm();

  t.clusters.k = 1;
  t.clusters.centroids = t.cluster_means;
  t.clusters.assignments.assign(all.size(), 0);
  t.clusters.objective = kernels::parallel::sum(sq);
  t.bases.push_back(principal_components(centered, m));
  return t;
}

FittedTransform fit_global(const EmbeddingStore& w, std::uint32_t m) {
  return fit_global(w.to_matrix(), m);
}

FittedTransform fit_cluster_based(const Matrix& w, std::uint32_t k, std::uint32_t m,
                                  std::uint64_t seed, const ClusterFitOptions& options) {
  check_m(m, w.cols());
  for (const auto& [cluster, count] : options.m_overrides) {
    if (cluster >= k) throw ValueError("m override for nonexistent cluster " + std::to_string(cluster));
    check_m(count, w.cols());
  }

  FittedTransform t;
  t.kind = TransformKind::cluster_based;
  t.m_requested = m;
  t.fit_fingerprint = matrix_fingerprint(w);
  t.clusters = kmeans_fit(w, k, seed, options.kmeans);
  t.cluster_means = cluster_means(w, t.clusters.assignments, k);
  t.bases.resize(k);

  const auto members = cluster_members(t.clusters.assignments, k);
  const auto clusters = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t c = 0; c < clusters; ++c) {
    const auto& rows = members[c];
    auto it = options.m_overrides.find(static_cast<std::uint32_t>(c));
    const std::uint32_t wanted = it == options.m_overrides.end() ? m : it->second;
    const Eigen::Index limit = std::min<Eigen::Index>(static_cast<Eigen::Index>(rows.size()), w.cols());
    Eigen::Index count = wanted;
    if (count > limit) {
      warn("cluster " + std::to_string(c) + " has " + std::to_string(rows.size()) +
           " rows; removing at most " + std::to_string(limit) + " of " + std::to_string(wanted) +
           " components");
      count = limit;
    }
    const Matrix centered = gather_centered(w, rows, t.cluster_means.row(c).transpose());
    t.bases[c] = principal_components(centered, count);
  }
  return t;
}

FittedTransform fit_cluster_based(const EmbeddingStore& w, std::uint32_t k, std::uint32_t m,
                                  std::uint64_t seed, const ClusterFitOptions& options) {
  return fit_cluster_based(w.to_matrix(), k, m, seed, options);
}

Matrix apply(const FittedTransform& t, const Matrix& w) {
  if (w.cols() != t.dim()) {
    throw DimError("store dim " + std::to_string(w.cols()) + " != transform dim " +
                   std::to_string(t.dim()));
  }
  const auto assignment = kernels::parallel::assign_nearest(w, t.clusters.centroids);
  Matrix out = w;
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const auto c = assignment.cluster[i];
    out.row(i) -= t.cluster_means.row(c);
    remove_components_inplace(row_span(out, i), t.bases[c]);
  }
  return out;
}

EmbeddingStore apply(const FittedTransform& t, const EmbeddingStore& w) {
  return EmbeddingStore::from_matrix(apply(t, w.to_matrix()), w.meta());
}

bool fitted_on(const FittedTransform& t, const Matrix& w) {
  return matrix_fingerprint(w) == t.fit_fingerprint;
}

std::string encode_transform(const FittedTransform& t) {
  io::ByteWriter out;
  out.bytes(kMagic);
  out.u8(static_cast<std::uint8_t>(t.kind));
  out.u32(t.k());
  out.u32(static_cast<std::uint32_t>(t.dim()));
  out.u32(t.m_requested);
  out.u64(t.clusters.seed);
  out.u64(t.fit_fingerprint);
  write_cluster_model(out, t.clusters);
  for (Eigen::Index i = 0; i < t.cluster_means.size(); ++i) out.f64(t.cluster_means.data()[i]);
  for (const auto& b : t.bases) {
    out.u32(static_cast<std::uint32_t>(b.size()));
    for (double v : b.variances) out.f64(v);
    for (Eigen::Index i = 0; i < b.components.size(); ++i) out.f64(b.components.data()[i]);
  }
  return out.release();
}

FittedTransform decode_transform(std::string_view bytes) {
  io::ByteReader in(bytes);
  if (in.bytes(kMagic.size(), "transform magic") != kMagic) {
    throw FormatError("missing ISOT1 magic");
  }
  FittedTransform t;
  const auto kind = in.u8("kind");
  if (kind > 1) throw FormatError("unknown transform kind " + std::to_string(kind));
  t.kind = static_cast<TransformKind>(kind);
  const auto k = in.u32("k");
  const auto d = in.u32("dimension");
  t.m_requested = in.u32("m");
  const auto seed = in.u64("seed");
  t.fit_fingerprint = in.u64("fingerprint");
  t.clusters = read_cluster_model(in);
  if (t.clusters.k != k || t.clusters.centroids.cols() != d || t.clusters.seed != seed) {
    throw FormatError("transform header disagrees with its cluster block");
  }
  if (t.kind == TransformKind::global && k != 1) throw FormatError("global transform with k != 1");

  t.cluster_means.resize(k, d);
  for (Eigen::Index i = 0; i < t.cluster_means.size(); ++i) t.cluster_means.data()[i] = in.f64("mean");
  t.bases.resize(k);
  for (auto& b : t.bases) {
    const auto count = in.u32("component count");
    if (count > d) throw FormatError("basis holds more components than dimensions");
    b.variances.resize(count);
    for (auto& v : b.variances) v = in.f64("variance");
    b.components.resize(count, d);
    for (Eigen::Index i = 0; i < b.components.size(); ++i) b.components.data()[i] = in.f64("component");
  }
  if (in.remaining() != 0) throw FormatError("trailing bytes after transform");
  return t;
}

void save_transform(const FittedTransform& t, const std::filesystem::path& path) {
  io::atomic_write({{path, encode_transform(t)}});
}

FittedTransform load_transform(const std::filesystem::path& path) {
  return decode_transform(io::read_file(path));
}

ModelDefaults model_defaults(std::string_view model) {
  if (model == "bert") return {27, 12, 15};
  if (model == "roberta") return {27, 12, 25};
  if (model == "gpt2") return {10, 30, 30};
  throw ValueError("unknown model preset '" + std::string(model) + "' (bert, roberta, gpt2)");
}

}  // namespace isoforge
