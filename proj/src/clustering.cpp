#include "isoforge/clustering.hpp"

#include <cassert>
#include <cmath>
#include <string>

#include "isoforge/errors.hpp"
#include "isoforge/kernels.hpp"
#include "isoforge/numeric.hpp"

namespace isoforge {
namespace {

constexpr std::string_view kMagic = "ISOK1";

double sq_distance(const Matrix& w, Eigen::Index i, const Matrix& c, Eigen::Index j) {
  double acc = 0.0;
  for (Eigen::Index t = 0; t < w.cols(); ++t) {
    const double diff = w(i, t) - c(j, t);
    acc += diff * diff;
  }
  return acc;
}

Matrix kmeans_plus_plus(const Matrix& w, std::uint32_t k, SeededRng& rng) {
  const auto n = w.rows();
  Matrix centroids(k, w.cols());
  std::vector<char> chosen(n, 0);
  std::vector<double> nearest(n);

  auto take = [&](Eigen::Index pick, Eigen::Index slot) {
    chosen[pick] = 1;
    centroids.row(slot) = w.row(pick);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = sq_distance(w, i, centroids, slot);
      if (slot == 0 || d < nearest[i]) nearest[i] = d;
    }
  };

  take(static_cast<Eigen::Index>(rng.below(n)), 0);
  for (std::uint32_t slot = 1; slot < k; ++slot) {
    const double total = kernels::parallel::sum(nearest);
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cumulative = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (nearest[i] <= 0.0) continue;
        cumulative += nearest[i];
        pick = i;
        if (cumulative > target) break;
      }
    }
    if (pick < 0) {
      // Every remaining point coincides with a centroid.
      for (Eigen::Index i = 0; i < n && pick < 0; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    take(pick, slot);
  }
  return centroids;
}

// Moves each empty cluster's centroid onto the point farthest from its own
// centroid, taken from a cluster that can spare it.
void repair_empty(const Matrix& w, Matrix& centroids, Assignment& a) {
  const auto k = centroids.rows();
  std::vector<std::size_t> counts(k, 0);
  for (auto c : a.cluster) ++counts[c];
  for (Eigen::Index c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    Eigen::Index arg = -1;
    double best = -1.0;
    for (std::size_t i = 0; i < a.cluster.size(); ++i) {
      if (counts[a.cluster[i]] >= 2 && a.sq_distance[i] > best) {
        best = a.sq_distance[i];
        arg = static_cast<Eigen::Index>(i);
      }
    }
    if (arg < 0) throw CardinalityError("cannot fill an empty cluster");
    centroids.row(c) = w.row(arg);
    --counts[a.cluster[arg]];
    a.cluster[arg] = static_cast<std::uint32_t>(c);
    a.sq_distance[arg] = 0.0;
    counts[c] = 1;
  }
}

void update_centroids(const Matrix& w, const Assignment& a, Matrix& centroids) {
  const auto members = cluster_members(a.cluster, static_cast<std::uint32_t>(centroids.rows()));
  const auto k = static_cast<std::int64_t>(members.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t c = 0; c < k; ++c) {
    centroids.row(c) = column_mean(w, members[c]).transpose();
  }
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed) : engine_(seed) {}

double SeededRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t SeededRng::below(std::uint64_t n) {
  const auto v = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  return v < n ? v : n - 1;
}

std::vector<std::vector<std::uint32_t>> cluster_members(std::span<const std::uint32_t> assignments,
                                                        std::uint32_t k) {
  std::vector<std::vector<std::uint32_t>> members(k);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    members.at(assignments[i]).push_back(static_cast<std::uint32_t>(i));
  }
  return members;
}

Matrix cluster_means(const Matrix& w, std::span<const std::uint32_t> assignments,
                     std::uint32_t k) {
  const auto members = cluster_members(assignments, k);
  Matrix means = Matrix::Zero(k, w.cols());
  for (std::uint32_t c = 0; c < k; ++c) {
    if (!members[c].empty()) means.row(c) = column_mean(w, members[c]).transpose();
  }
  return means;
}

ClusterModel kmeans_fit(const Matrix& w, std::uint32_t k, std::uint64_t seed,
                        const KMeansOptions& options) {
  const auto n = static_cast<std::uint64_t>(w.rows());
  if (k < 1 || k > n) {
    throw CardinalityError("k = " + std::to_string(k) + " must lie in [1, " + std::to_string(n) +
                           "]");
  }
  SeededRng rng(seed);
  Matrix centroids = kmeans_plus_plus(w, k, rng);

  auto assignment = kernels::parallel::assign_nearest(w, centroids);
  repair_empty(w, centroids, assignment);
  double objective = kernels::parallel::sum(assignment.sq_distance);

  std::uint32_t iterations = 0;
  while (iterations < options.max_iterations) {
    ++iterations;
    update_centroids(w, assignment, centroids);
    assignment = kernels::parallel::assign_nearest(w, centroids);
    repair_empty(w, centroids, assignment);
    const double next = kernels::parallel::sum(assignment.sq_distance);
    assert(next <= objective * (1.0 + 1e-12) + 1e-12 && "k-means objective increased");
    const bool converged =
        objective <= 0.0 || (objective - next) < options.relative_tolerance * objective;
    objective = next;
    if (converged) break;
  }

  ClusterModel model;
  model.k = k;
  model.centroids = std::move(centroids);
  model.assignments = std::move(assignment.cluster);
  model.objective = objective;
  model.seed = seed;
  model.iterations_run = iterations;
  return model;
}

std::uint32_t kmeans_assign(const ClusterModel& model, std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) != model.centroids.cols()) {
    throw DimError("point has " + std::to_string(x.size()) + " entries, centroids have " +
                   std::to_string(model.centroids.cols()));
  }
  Matrix point(1, model.centroids.cols());
  std::copy(x.begin(), x.end(), point.data());
  return kernels::serial::assign_nearest(point, model.centroids).cluster[0];
}

IsotropyReport local_isotropy(const Matrix& w, std::uint32_t k, std::uint64_t seed,
                              SignMode mode) {
  const auto model = kmeans_fit(w, k, seed);
  const Matrix means = cluster_means(w, model.assignments, k);
  Matrix centered = w;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    centered.row(i) -= means.row(model.assignments[i]);
  }
  return isotropy_score(centered, mode);
}

void write_cluster_model(io::ByteWriter& out, const ClusterModel& model) {
  out.bytes(kMagic);
  out.u32(model.k);
  out.u32(static_cast<std::uint32_t>(model.centroids.cols()));
  out.u32(static_cast<std::uint32_t>(model.assignments.size()));
  out.u64(model.seed);
  out.u32(model.iterations_run);
  out.f64(model.objective);
  for (Eigen::Index i = 0; i < model.centroids.size(); ++i) out.f64(model.centroids.data()[i]);
  for (auto a : model.assignments) out.u32(a);
}

ClusterModel read_cluster_model(io::ByteReader& in) {
  if (in.bytes(kMagic.size(), "cluster magic") != kMagic) {
    throw FormatError("missing ISOK1 magic");
  }
  ClusterModel m;
  m.k = in.u32("k");
  const auto d = in.u32("dimension");
  const auto n = in.u32("row count");
  m.seed = in.u64("seed");
  m.iterations_run = in.u32("iterations");
  m.objective = in.f64("objective");
  if (m.k == 0 || d == 0) throw FormatError("cluster model declares k or D of zero");
  const std::uint64_t centroid_bytes = std::uint64_t{m.k} * d * 8;
  const std::uint64_t assignment_bytes = std::uint64_t{n} * 4;
  if (in.remaining() < centroid_bytes + assignment_bytes) {
    throw TruncationError("cluster model payload truncated");
  }
  m.centroids.resize(m.k, d);
  for (Eigen::Index i = 0; i < m.centroids.size(); ++i) m.centroids.data()[i] = in.f64("centroid");
  m.assignments.resize(n);
  for (auto& a : m.assignments) {
    a = in.u32("assignment");
    if (a >= m.k) throw FormatError("assignment index out of range");
  }
  return m;
}

void save_cluster_model(const ClusterModel& model, const std::filesystem::path& path) {
  io::ByteWriter w;
  write_cluster_model(w, model);
  io::atomic_write({{path, w.release()}});
}

ClusterModel load_cluster_model(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  io::ByteReader in(bytes);
  auto m = read_cluster_model(in);
  if (in.remaining() != 0) throw FormatError("trailing bytes after cluster model");
  return m;
}

}  // namespace isoforge
