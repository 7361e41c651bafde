#include <doctest.h>

#include <algorithm>
#include <array>
#include <filesystem>
#include <unistd.h>

#include "fixtures.hpp"
#include "isoforge/diagnostics.hpp"
#include "isoforge/errors.hpp"
#include "isoforge/isotropy.hpp"
#include "isoforge/transform.hpp"

using namespace isoforge;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

struct QuietWarnings {
  int count = 0;
  WarningSink previous = set_warning_sink([this](std::string_view) { ++count; });
  ~QuietWarnings() { set_warning_sink(previous); }
};

double abs_cos(const Eigen::RowVectorXd& a, const Eigen::VectorXd& b) {
  return std::abs(a.dot(b.transpose())) / (a.norm() * b.norm());
}

}  // namespace

TEST_CASE("removing every component leaves the zero matrix") {
  const Matrix w = fixtures::gaussian_matrix(40, 4, 1);
  const auto t = fit_global(w, 4);
  CHECK(apply(t, w).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("m outside [1, dim] is a RankError") {
  const Matrix w = fixtures::gaussian_matrix(10, 3, 2);
  CHECK_THROWS_AS(fit_global(w, 0), RankError);
  CHECK_THROWS_AS(fit_global(w, 4), RankError);
  CHECK_THROWS_AS(fit_cluster_based(w, 2, 4, 0), RankError);
  ClusterFitOptions bad;
  bad.m_overrides[5] = 1;
  CHECK_THROWS_AS(fit_cluster_based(w, 2, 1, 0, bad), ValueError);
}

TEST_CASE("global fit recovers a planted dominant direction") {
  fixtures::Rng rng(3);
  Eigen::VectorXd dir(6);
  for (Eigen::Index j = 0; j < 6; ++j) dir(j) = rng.normal();
  dir.normalize();
  Matrix w = fixtures::gaussian_matrix(500, 6, 4);
  for (Eigen::Index i = 0; i < w.rows(); ++i) w.row(i) += 20.0 * rng.normal() * dir.transpose();
  const auto t = fit_global(w, 1);
  CHECK(abs_cos(t.bases[0].components.row(0), dir) > 0.99);
  const auto out = apply(t, w);
  CHECK(isotropy_score(out).score > isotropy_score(w).score);
}

TEST_CASE("cluster fit recovers each cluster's own direction") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto mix = fixtures::planted_mixture(100, 6, seed);
    const auto t = fit_cluster_based(mix.points, 3, 1, seed);
    for (std::uint32_t c = 0; c < 3; ++c) {
      // The planted cluster that most members of fitted cluster c came from.
      std::array<int, 3> votes{};
      for (std::size_t i = 0; i < mix.labels.size(); ++i)
        if (t.clusters.assignments[i] == c) ++votes[mix.labels[i]];
      const auto label = std::max_element(votes.begin(), votes.end()) - votes.begin();
      CHECK(votes[label] == 100);
      CHECK(abs_cos(t.bases[c].components.row(0), mix.directions[label]) > 0.98);
    }
  }
}

TEST_CASE("cluster-based with k = 1 equals global") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix w = fixtures::gaussian_matrix(80, 5, seed) + Matrix::Constant(80, 5, 3.0);
    for (std::uint32_t m : {1u, 2u, 5u}) {
      const auto g = apply(fit_global(w, m), w);
      const auto c = apply(fit_cluster_based(w, 1, m, seed), w);
      CHECK((g - c).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("apply output is orthogonal to each row's removed components") {
  const auto mix = fixtures::planted_mixture(60, 5, 7);
  const auto t = fit_cluster_based(mix.points, 3, 2, 7);
  const Matrix out = apply(t, mix.points);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const auto& basis = t.bases[t.clusters.assignments[i]];
    for (Eigen::Index c = 0; c < basis.size(); ++c)
      CHECK(std::abs(out.row(i).dot(basis.components.row(c))) <= 1e-8 * mix.points.row(i).norm());
  }
}

TEST_CASE("residual variance equals the dropped eigenvalues") {
  const Matrix w = fixtures::gaussian_matrix(120, 6, 8) * fixtures::random_matrix(6, 6, 9);
  const auto full = fit_global(w, 6);
  const auto t = fit_global(w, 2);
  double rest = 0.0;
  for (std::size_t c = 2; c < full.bases[0].variances.size(); ++c) rest += full.bases[0].variances[c];
  const Matrix out = apply(t, w);
  CHECK(out.squaredNorm() / static_cast<double>(w.rows()) == Approx(rest).epsilon(1e-9));
}

TEST_CASE("global m = 1 on a cross polytope with the removed axis dropped") {
  const Matrix w = fixtures::cross_polytope(4, 2.0);
  // Break the degeneracy so axis 0 is the top component.
  Matrix stretched = w;
  stretched.col(0) *= 3.0;
  const auto t = fit_global(stretched, 1);
  CHECK(std::abs(t.bases[0].components(0, 0)) == Approx(1.0));
  const Matrix out = apply(t, stretched);
  CHECK(out.col(0).cwiseAbs().maxCoeff() <= 1e-12);
  // Rows that lived on axis 0 collapse to the origin; the remaining axes are untouched.
  Matrix rest(6, 3);
  for (Eigen::Index i = 2; i < 8; ++i) rest.row(i - 2) = out.row(i).tail(3);
  CHECK(isotropy_score(rest).score == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("small clusters clamp their component count with a warning") {
  Matrix w(7, 4);
  w.topRows(5) = fixtures::gaussian_matrix(5, 4, 1);
  w.bottomRows(2) = fixtures::gaussian_matrix(2, 4, 2) + Matrix::Constant(2, 4, 100.0);
  QuietWarnings q;
  const auto t = fit_cluster_based(w, 2, 3, 0);
  CHECK(q.count >= 1);
  for (const auto& b : t.bases) CHECK(b.size() <= 3);
  const auto small = t.clusters.assignments[5];
  CHECK(t.bases[small].size() <= 2);
}

TEST_CASE("per-cluster m overrides") {
  const auto mix = fixtures::planted_mixture(40, 5, 3);
  ClusterFitOptions opt;
  opt.m_overrides[1] = 3;
  const auto t = fit_cluster_based(mix.points, 3, 1, 3, opt);
  CHECK(t.bases[0].size() == 1);
  CHECK(t.bases[1].size() == 3);
  CHECK(t.bases[2].size() == 1);
}

TEST_CASE("ISOT1 round trip, bit-identical apply, corruption") {
  const fs::path dir = fs::temp_directory_path() / ("isoforge_tf_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto mix = fixtures::planted_mixture(30, 4, 5);
  for (const auto& t : {fit_global(mix.points, 2), fit_cluster_based(mix.points, 3, 1, 5)}) {
    save_transform(t, dir / "t.isot");
    const auto back = load_transform(dir / "t.isot");
    CHECK(back == t);
    CHECK(apply(back, mix.points) == apply(t, mix.points));
    CHECK(fitted_on(back, mix.points));

    const auto bytes = encode_transform(t);
    CHECK(decode_transform(bytes) == t);
    CHECK_THROWS_AS(decode_transform(std::string_view(bytes).substr(0, bytes.size() - 3)), TruncationError);
    CHECK_THROWS_AS(decode_transform(bytes + "x"), FormatError);
    std::string bad = bytes;
    bad[5] = 7;
    CHECK_THROWS_AS(decode_transform(bad), FormatError);
  }
  fs::remove_all(dir);
}

TEST_CASE("fitted_on detects a different matrix") {
  Matrix w = fixtures::gaussian_matrix(20, 3, 1);
  const auto t = fit_global(w, 1);
  CHECK(fitted_on(t, w));
  w(3, 1) += 1e-12;
  CHECK_FALSE(fitted_on(t, w));
}

TEST_CASE("apply on a store keeps metadata and rejects a dim mismatch") {
  const Matrix w = fixtures::gaussian_matrix(10, 3, 4);
  const auto store = EmbeddingStore::from_matrix(w, fixtures::simple_meta(10, "x"));
  const auto t = fit_global(store, 1);
  const auto out = apply(t, store);
  CHECK(out.meta() == store.meta());
  CHECK_THROWS_AS(apply(t, fixtures::gaussian_matrix(4, 2, 1)), DimError);
}

TEST_CASE("cluster-based beats global on the planted mixture") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto mix = fixtures::planted_mixture(100, 6, seed);
    const double global = isotropy_score(apply(fit_global(mix.points, 1), mix.points)).log_score();
    const double cluster = isotropy_score(apply(fit_cluster_based(mix.points, 3, 1, seed), mix.points)).log_score();
    CHECK(cluster > global);
  }
}

TEST_CASE("model presets") {
  CHECK(model_defaults("bert").clusters == 27);
  CHECK(model_defaults("gpt2").global_pcs == 30);
  CHECK_THROWS_AS(model_defaults("t5"), ValueError);
}
