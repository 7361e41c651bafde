// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "fixtures.hpp"
#include "isoforge/analysis.hpp"
#include "isoforge/binary_io.hpp"
#include "isoforge/clustering.hpp"
#include "isoforge/diagnostics.hpp"
#include "isoforge/isotropy.hpp"
#include "isoforge/kernels.hpp"
#include "isoforge/numeric.hpp"
#include "isoforge/store.hpp"
#include "isoforge/transform.hpp"

using namespace isoforge;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

int report(const char* name, const std::function<Check()>& body) {
  Check c;
  try {
    c = body();
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail = std::string("exception: ") + e.what();
  }
  std::printf("%s %s%s%s\n", c.ok ? "PASS" : "FAIL", name, c.detail.empty() ? "" : " - ",
              c.detail.c_str());
  std::fflush(stdout);
  return c.ok ? 0 : 1;
}

Check isotropy_sanity() {
  Check c;
  const auto start = Clock::now();
  for (Eigen::Index d : {2, 8, 64}) {
    const double score = isotropy_score(fixtures::cross_polytope(d)).score;
    c.require(std::abs(score - 1.0) <= 1e-9, "cross polytope d=" + std::to_string(d) + " scored " + num(score));
  }
  const Matrix cone = fixtures::cone(200, 8, 0);
  const double raw = isotropy_score(cone).score;
  c.require(raw < 1e-3, "cone scored " + num(raw));
  const double centred = isotropy_score(center_columns(cone).centered).score;
  c.require(centred > raw, "centring did not raise the cone's score");
  const double elapsed = seconds_since(start);
  c.require(elapsed < 1.0, "took " + num(elapsed) + " s");
  if (c.ok) c.detail = "cone " + num(raw) + " -> centred " + num(centred) + ", " + num(elapsed) + " s";
  return c;
}

Check oracle_equivalence() {
  Check c;
  fixtures::Rng rng(2024);
  double worst_pca = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto d = static_cast<Eigen::Index>(1 + rng.below(6));
    const auto n = static_cast<Eigen::Index>(d + 1 + rng.below(30 - d));
    const Matrix m = fixtures::gaussian_matrix(n, d, 1000 + t);
    const auto basis = principal_components(m, d);
    const auto eig = oracle::jacobi_eigen(oracle::scatter(fixtures::to_dense(m)));
    for (Eigen::Index k = 0; k < d; ++k) {
      std::vector<double> row(basis.components.row(k).data(), basis.components.row(k).data() + d);
      worst_pca = std::max(worst_pca, oracle::sign_free_distance(row, eig.vectors[k]));
    }
  }
  c.require(worst_pca <= 1e-8, "principal components differ by " + num(worst_pca));

  double worst_rho = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 5 + rng.below(60);
    std::vector<double> x(n), y(n);
    do {
      for (auto& v : x) v = static_cast<double>(rng.below(6));
      for (auto& v : y) v = static_cast<double>(rng.below(n));
    } while (*std::min_element(x.begin(), x.end()) == *std::max_element(x.begin(), x.end()) ||
             *std::min_element(y.begin(), y.end()) == *std::max_element(y.begin(), y.end()));
    worst_rho = std::max(worst_rho, std::abs(spearman(x, y) - oracle::spearman(x, y)));
  }
  c.require(worst_rho <= 1e-12, "spearman differs by " + num(worst_rho));

  const Matrix w = fixtures::gaussian_matrix(400, 5, 77);
  const auto model = kmeans_fit(w, 8, 3);
  const auto cents = fixtures::to_dense(model.centroids);
  const Matrix queries = fixtures::gaussian_matrix(100, 5, 78);
  int mismatches = 0;
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    std::vector<double> q(queries.row(i).data(), queries.row(i).data() + 5);
    if (kmeans_assign(model, q) != oracle::nearest(cents, q)) ++mismatches;
  }
  c.require(mismatches == 0, std::to_string(mismatches) + " k-means assignments differ");
  if (c.ok) c.detail = "pca " + num(worst_pca) + ", spearman " + num(worst_rho);
  return c;
}

Check transform_invariants() {
  Check c;
  const auto start = Clock::now();

  double worst_ortho = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto mix = fixtures::planted_mixture(100, 8, seed);
    const auto t = fit_cluster_based(mix.points, 3, 2, seed);
    const Matrix out = apply(t, mix.points);
    const auto assign = kernels::parallel::assign_nearest(mix.points, t.clusters.centroids).cluster;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const auto& basis = t.bases[assign[i]];
      const double norm = mix.points.row(i).norm();
      for (Eigen::Index k = 0; k < basis.size(); ++k)
        worst_ortho = std::max(worst_ortho, std::abs(out.row(i).dot(basis.components.row(k))) / norm);
    }
  }
  c.require(worst_ortho <= 1e-8, "residual projection ratio " + num(worst_ortho));

  double worst_k1 = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix w = fixtures::gaussian_matrix(150, 6, 50 + seed) + Matrix::Constant(150, 6, 2.0);
    const Matrix g = apply(fit_global(w, 2), w);
    const Matrix k1 = apply(fit_cluster_based(w, 1, 2, seed), w);
    worst_k1 = std::max(worst_k1, (g - k1).cwiseAbs().maxCoeff());
  }
  c.require(worst_k1 <= 1e-10, "k=1 differs from global by " + num(worst_k1));

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto mix = fixtures::planted_mixture(100, 6, seed);
    const double global = isotropy_score(apply(fit_global(mix.points, 1), mix.points)).log_score();
    const double cluster =
        isotropy_score(apply(fit_cluster_based(mix.points, 3, 1, seed), mix.points)).log_score();
    c.require(cluster > global, "seed " + std::to_string(seed) + ": cluster log I " + num(cluster) +
                                    " <= global " + num(global));
  }

  const double elapsed = seconds_since(start);
  c.require(elapsed < 5.0, "took " + num(elapsed) + " s");
  if (c.ok) c.detail = "orthogonality " + num(worst_ortho) + ", k=1 gap " + num(worst_k1) + ", " + num(elapsed) + " s";
  return c;
}

Check tense_flip() {
  Check c;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = fixtures::tense_store(3, 12, 8, seed);
    const auto before = tense_bias(s);
    const auto after = tense_bias(apply(fit_cluster_based(s, 3, 1, seed), s));
    c.require(before.dt_sm > before.st_dm, "seed " + std::to_string(seed) + ": baseline DT-SM " +
                                               num(before.dt_sm) + " <= ST-DM " + num(before.st_dm));
    c.require(after.dt_sm < after.st_dm, "seed " + std::to_string(seed) + ": enhanced DT-SM " +
                                             num(after.dt_sm) + " >= ST-DM " + num(after.st_dm));
  }
  return c;
}

int shell(const std::string& cmd) {
  const int s = std::system(cmd.c_str());
  return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

Check determinism() {
  Check c;
  const fs::path dir = fs::temp_directory_path() / ("isoforge_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir / "layers");

  // Fixtures on disk.
  const auto mix = fixtures::planted_mixture(40, 6, 1);
  auto meta = fixtures::simple_meta(120, ".");
  for (std::size_t i = 0; i < meta.size(); ++i) {
    meta[i].group_id = mix.labels[i];
    meta[i].frequency = i;
  }
  save_store(EmbeddingStore::from_matrix(mix.points, meta), dir / "mix.isof");
  save_store(fixtures::tense_store(3, 12, 8, 0), dir / "tense.isof");
  for (int l = 0; l < 3; ++l)
    save_store(EmbeddingStore::from_matrix(fixtures::cone(50, 6, l, l)), dir / "layers" / ("layer" + std::to_string(l) + ".isof"));
  {
    std::ofstream map(dir / "map.tsv"), pairs(dir / "pairs.tsv");
    for (int i = 0; i < 120; ++i) map << i << "\tsentence " << i << "\n";
    fixtures::Rng rng(9);
    for (int i = 0; i < 60; ++i) pairs << rng.below(6) << "\tsentence " << 2 * i << "\tsentence " << 2 * i + 1 << "\n";
  }

  const std::string bin = ISOFORGE_CLI_PATH;
  const std::string store = quote(dir / "mix.isof");
  const std::vector<std::pair<std::string, std::string>> commands{
      {"isotropy", "isotropy " + store},
      {"layers", "isotropy --layers " + quote(dir / "layers")},
      {"local", "isotropy " + store + " --local-k 3 --seeds 0,1,2"},
      {"enhance", "enhance " + store + " --mode cluster -k 3 -m 1 -o " + quote(dir / "enh_RUN")},
      {"sts", "eval-sts " + store + " --pairs " + quote(dir / "pairs.tsv") + " --sentences " +
                  quote(dir / "map.tsv") + " --mode cluster -k 3 -m 1"},
      {"knn", "knn-purity " + store + " --token . --mode global -m 1"},
      {"tense", "tense-bias " + quote(dir / "tense.isof") + " -k 3 -m 1"},
      {"project", "project2d " + store + " --mode cluster -k 3 -m 1"},
  };
  std::vector<std::string> outputs[2];
  for (int run = 0; run < 2; ++run) {
    for (const auto& [name, args] : commands) {
      std::string cmd = args;
      const auto pos = cmd.find("RUN");
      if (pos != std::string::npos) cmd.replace(pos, 3, std::to_string(run));
      const fs::path out = dir / (name + std::to_string(run) + ".out");
      const int code = shell(bin + " --threads " + std::to_string(run + 1) + " " + cmd + " > " + quote(out) + " 2>/dev/null");
      c.require(code == 0, name + " exited " + std::to_string(code));
      outputs[run].push_back(io::read_file(out));
    }
    for (const char* ext : {".isof", ".isot", ".isof.meta.jsonl"})
      outputs[run].push_back(io::read_file(dir / ("enh_" + std::to_string(run) + ext)));
  }
  for (std::size_t i = 0; i < outputs[0].size(); ++i) {
    const std::string name = i < commands.size() ? commands[i].first : "enhance artefact " + std::to_string(i);
    c.require(outputs[0][i] == outputs[1][i], name + " output differs between runs");
    c.require(!outputs[0][i].empty(), name + " output is empty");
  }

  // Round trips on randomized fixtures.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    fixtures::Rng rng(seed);
    const auto n = static_cast<Eigen::Index>(2 + rng.below(60));
    const auto d = static_cast<Eigen::Index>(1 + rng.below(20));
    const Matrix m = fixtures::gaussian_matrix(n, d, seed) * 100.0;
    auto rmeta = fixtures::simple_meta(n, "t" + std::to_string(seed));
    for (auto& t : rmeta) {
      if (rng.uniform() < 0.5) t.lemma = "l";
      if (rng.uniform() < 0.5) {
        t.tense = rng.uniform() < 0.5 ? Tense::past : Tense::present;
        t.sense_id = "s";
      }
      if (rng.uniform() < 0.5) t.group_id = static_cast<std::int64_t>(rng.below(9)) - 4;
      if (rng.uniform() < 0.5) t.frequency = rng.below(1u << 30);
    }
    const auto s = EmbeddingStore::from_matrix(m, rmeta);
    save_store(s, dir / "rt.isof");
    c.require(load_store(dir / "rt.isof") == s, "ISOF round trip failed for seed " + std::to_string(seed));

    const auto k = static_cast<std::uint32_t>(1 + rng.below(std::min<Eigen::Index>(n, 5)));
    const auto model = kmeans_fit(s.to_matrix(), k, seed);
    save_cluster_model(model, dir / "rt.isok");
    c.require(load_cluster_model(dir / "rt.isok") == model, "ISOK1 round trip failed for seed " + std::to_string(seed));

    auto quiet = set_warning_sink([](std::string_view) {});
    const auto t = fit_cluster_based(s.to_matrix(), k, 1, seed);
    set_warning_sink(quiet);
    save_transform(t, dir / "rt.isot");
    const auto back = load_transform(dir / "rt.isot");
    c.require(back == t, "ISOT1 round trip failed for seed " + std::to_string(seed));
    c.require(apply(back, s.to_matrix()) == apply(t, s.to_matrix()), "reloaded transform applies differently");
  }

  fs::remove_all(dir);
  if (c.ok) c.detail = std::to_string(commands.size()) + " commands, 10 randomized round trips per format";
  return c;
}

}  // namespace

int main() {
  int failures = 0;
  failures += report("isotropy-sanity", isotropy_sanity);
  failures += report("oracle-equivalence", oracle_equivalence);
  failures += report("transform-invariants", transform_invariants);
  failures += report("tense-flip", tense_flip);
  failures += report("determinism", determinism);
  return failures == 0 ? 0 : 1;
}
