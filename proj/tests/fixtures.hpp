#pragma once

// Synthetic embedding spaces with known geometry, shared by the unit tests
// and the acceptance suite.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "isoforge/matrix.hpp"
#include "isoforge/store.hpp"
#include "oracles.hpp"

namespace fixtures {

using isoforge::Matrix;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    // Box-Muller; 1 - u keeps the log argument positive.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * n) % n; }

 private:
  std::mt19937_64 engine_;
};

inline Matrix random_matrix(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double lo = -1.0,
                            double hi = 1.0) {
  Rng rng(seed);
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

inline Matrix gaussian_matrix(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

/// Random orthogonal matrix (Gram-Schmidt on a Gaussian matrix).
inline Matrix random_rotation(Eigen::Index d, std::uint64_t seed) {
  Matrix q = gaussian_matrix(d, d, seed);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) q.row(i) -= q.row(i).dot(q.row(j)) * q.row(j);
    q.row(i).normalize();
  }
  return q;
}

/// The 2d vertices +-e_i of the cross polytope, scaled.
inline Matrix cross_polytope(Eigen::Index d, double scale = 1.0) {
  Matrix m = Matrix::Zero(2 * d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    m(2 * i, i) = scale;
    m(2 * i + 1, i) = -scale;
  }
  return m;
}

/// Narrow cone: every coordinate positive, the first at least 5x the others.
inline Matrix cone(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double offset = 0.0) {
  Rng rng(seed);
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    double largest = 0.0;
    for (Eigen::Index j = 1; j < d; ++j) {
      m(i, j) = rng.uniform(0.05, 1.0);
      largest = std::max(largest, m(i, j));
    }
    m(i, 0) = 5.0 * largest + rng.uniform(0.0, 2.0) + offset;
  }
  return m;
}

/// Three cones pointing along different axes and displaced from the origin.
inline Matrix cone_mixture(Eigen::Index per_cluster, Eigen::Index d, std::uint64_t seed) {
  Matrix m(3 * per_cluster, d);
  for (int c = 0; c < 3; ++c) {
    Matrix part = cone(per_cluster, d, seed * 7 + c);
    // Rotate the cone axis from e_0 to e_c and push the cluster out along it.
    for (Eigen::Index i = 0; i < per_cluster; ++i) {
      std::swap(part(i, 0), part(i, c));
      part(i, c) += 4.0;
    }
    m.middleRows(c * per_cluster, per_cluster) = part;
  }
  return m;
}

/// Two Gaussian blobs, unit variance, centres 10 sigma apart.
inline Matrix two_blobs(Eigen::Index per_blob, Eigen::Index d, std::uint64_t seed,
                        std::vector<int>* labels = nullptr) {
  Rng rng(seed);
  Matrix m(2 * per_blob, d);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const int blob = i < per_blob ? 0 : 1;
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rng.normal();
    m(i, 0) += blob == 0 ? -5.0 : 5.0;
    if (labels) labels->push_back(blob);
  }
  return m;
}

/// Three well-separated clusters, each elongated along its own planted unit
/// direction (std 10) over isotropic unit noise.
struct PlantedMixture {
  Matrix points;
  std::vector<Eigen::VectorXd> directions;
  std::vector<int> labels;
};

inline PlantedMixture planted_mixture(Eigen::Index per_cluster, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  PlantedMixture out;
  out.points.resize(3 * per_cluster, d);
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd dir(d);
    for (Eigen::Index j = 0; j < d; ++j) dir(j) = rng.normal();
    dir.normalize();
    out.directions.push_back(dir);
    Eigen::VectorXd centre = Eigen::VectorXd::Zero(d);
    centre(c) = 60.0;
    for (Eigen::Index i = 0; i < per_cluster; ++i) {
      const Eigen::Index r = c * per_cluster + i;
      for (Eigen::Index j = 0; j < d; ++j) out.points(r, j) = centre(j) + rng.normal();
      out.points.row(r) += 10.0 * rng.normal() * dir.transpose();
      out.labels.push_back(c);
    }
  }
  return out;
}

/// Verb occurrences whose geometry is dominated by tense: each lemma sits at
/// its own far-away base point, tense shifts occurrences by +-tense_offset/2
/// along a shared tense axis, sense by +-sense_offset/2 along a per-lemma
/// sense axis, plus small noise.
inline isoforge::EmbeddingStore tense_store(int lemmas, int per_condition, Eigen::Index d,
                                            std::uint64_t seed, double tense_offset = 10.0,
                                            double sense_offset = 1.0, double noise = 0.1) {
  Rng rng(seed);
  const int rows = lemmas * 4 * per_condition;
  Matrix m(rows, d);
  std::vector<isoforge::TokenMeta> meta;
  Eigen::VectorXd tense_axis = Eigen::VectorXd::Zero(d);
  tense_axis(0) = 1.0;

  int r = 0;
  for (int l = 0; l < lemmas; ++l) {
    Eigen::VectorXd base = Eigen::VectorXd::Zero(d);
    base(1 + l % (d - 2)) = 100.0 * (1 + l / (d - 2));
    Eigen::VectorXd sense_axis(d);
    for (Eigen::Index j = 0; j < d; ++j) sense_axis(j) = rng.normal();
    sense_axis(0) = 0.0;
    sense_axis.normalize();
    const std::string lemma = "verb" + std::to_string(l);
    for (int tense = 0; tense < 2; ++tense) {
      for (int sense = 0; sense < 2; ++sense) {
        for (int i = 0; i < per_condition; ++i, ++r) {
          Eigen::VectorXd x = base + (tense - 0.5) * tense_offset * tense_axis +
                              (sense - 0.5) * sense_offset * sense_axis;
          for (Eigen::Index j = 0; j < d; ++j) x(j) += noise * rng.normal();
          m.row(r) = x.transpose();
          isoforge::TokenMeta t;
          t.token = lemma + (tense == 0 ? "ed" : "s");
          t.sentence_id = r;
          t.position = 0;
          t.lemma = lemma;
          t.tense = tense == 0 ? isoforge::Tense::past : isoforge::Tense::present;
          t.sense_id = lemma + "%" + std::to_string(sense);
          meta.push_back(t);
        }
      }
    }
  }
  return isoforge::EmbeddingStore::from_matrix(m, meta);
}

inline oracle::Dense to_dense(const Matrix& m) {
  oracle::Dense out(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

/// Plain metadata: one sentence per row unless told otherwise.
inline std::vector<isoforge::TokenMeta> simple_meta(std::size_t n, const std::string& token = "w") {
  std::vector<isoforge::TokenMeta> meta(n);
  for (std::size_t i = 0; i < n; ++i) {
    meta[i].token = token;
    meta[i].sentence_id = static_cast<std::int64_t>(i);
    meta[i].position = 0;
  }
  return meta;
}

}  // namespace fixtures
