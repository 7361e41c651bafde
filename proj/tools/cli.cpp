#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <ostream>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isoforge/analysis.hpp"
#include "isoforge/binary_io.hpp"
#include "isoforge/clustering.hpp"
#include "isoforge/errors.hpp"
#include "isoforge/isotropy.hpp"
#include "isoforge/kernels.hpp"
#include "isoforge/numeric.hpp"
#include "isoforge/store.hpp"
#include "isoforge/transform.hpp"

namespace isoforge::cli {
namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Options shared by the commands that fit a transform.
struct EnhanceOptions {
  std::string mode = "cluster";
  std::string preset = "bert";
  std::uint32_t k = 0;  // 0: take from preset
  std::uint32_t m = 0;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::string fit_path;
};

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;
};

Stats summarize(const std::vector<double>& values) {
  Stats s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(acc / (n - 1.0));
  }
  return s;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string sci(double v) { return v > 0.0 ? format_score(std::log(v)) : fmt("%.2E", v); }

void add_enhance_options(CLI::App* cmd, EnhanceOptions& o, bool allow_none) {
  cmd->add_option("--mode", o.mode,
                  allow_none ? "Transform before evaluating: none, global or cluster"
                             : "Enhancement method: global or cluster")
      ->check(allow_none ? CLI::IsMember({"none", "global", "cluster"})
                         : CLI::IsMember({"global", "cluster"}))
      ->capture_default_str();
  cmd->add_option("--preset", o.preset, "Model family supplying default k and m: bert, roberta, gpt2")
      ->check(CLI::IsMember({"bert", "roberta", "gpt2"}))
      ->capture_default_str();
  cmd->add_option("-k,--clusters", o.k,
                  "Number of k-means clusters (default from preset: bert 27, roberta 27, gpt2 10)");
  cmd->add_option("-m,--components", o.m,
                  "Principal components removed (default from preset: cluster 12/12/30, "
                  "global 15/25/30 for bert/roberta/gpt2)");
  cmd->add_option("--seeds", o.seeds, "Comma-separated k-means seeds")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--fit", o.fit_path, "Store to fit the transform on (default: the input store)");
}

bool seeded(const EnhanceOptions& o) { return o.mode == "cluster"; }

FittedTransform fit_transform(const EnhanceOptions& o, const Matrix& fit_on, std::uint64_t seed) {
  const auto preset = model_defaults(o.preset);
  if (o.mode == "global") return fit_global(fit_on, o.m ? o.m : preset.global_pcs);
  return fit_cluster_based(fit_on, o.k ? o.k : preset.clusters, o.m ? o.m : preset.cluster_pcs,
                           seed);
}

Matrix load_fit_matrix(const EnhanceOptions& o, const EmbeddingStore& input) {
  return o.fit_path.empty() ? input.to_matrix() : load_store(o.fit_path).to_matrix();
}

/// Runs `evaluate` on the input (mode none) or on each seed's enhanced store.
template <class F>
std::vector<double> over_seeds(const EnhanceOptions& o, const EmbeddingStore& input, F evaluate) {
  if (o.seeds.empty()) throw UsageError("--seeds must not be empty");
  if (o.mode == "none") return {evaluate(input)};
  const Matrix fit_on = load_fit_matrix(o, input);
  std::vector<double> values;
  const std::size_t runs = seeded(o) ? o.seeds.size() : 1;
  for (std::size_t r = 0; r < runs; ++r) {
    const auto t = fit_transform(o, fit_on, o.seeds[r]);
    values.push_back(evaluate(apply(t, input)));
  }
  return values;
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    io::atomic_write({{out_path, text}});
  }
}

std::vector<fs::path> layer_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::pair<long, fs::path>> found;
  const std::regex trailing(R"((\d+)$)");
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".isof") continue;
    const auto stem = entry.path().stem().string();
    std::smatch match;
    const long index = std::regex_search(stem, match, trailing) ? std::stol(match[1]) : -1;
    found.emplace_back(index, entry.path());
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& f : found) out.push_back(f.second);
  if (out.empty()) throw NotFoundError("no .isof files in " + dir.string());
  return out;
}

std::string report_row(const IsotropyReport& r) {
  return fmt("%.6f", r.log_f_min) + "," + fmt("%.6f", r.log_f_max) + "," +
         format_score(r.log_score()) + "," + std::to_string(r.n_directions) + "," +
         std::string(to_string(r.sign_mode));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Isotropy measurement and cluster-based enhancement for contextual embeddings",
               "isoforge"};
  app.require_subcommand(1);
  app.fallthrough();

  int threads = 0;
  app.add_option("--threads", threads,
                 "Worker threads (0: ISOFORGE_THREADS or all cores); results do not depend on it")
      ->capture_default_str();
  std::string out_path;
  std::string sign_mode_name = "both";

  // isotropy
  auto* iso = app.add_subcommand("isotropy", "Report I(W) of a store, a layer directory, or after "
                                             "per-cluster centering");
  std::string iso_store, iso_layers;
  bool iso_center = false;
  std::uint32_t iso_local_k = 0;
  std::vector<std::uint64_t> iso_seeds{0, 1, 2, 3, 4};
  iso->add_option("store", iso_store, "Input store (.isof or .tsv)");
  iso->add_option("--layers", iso_layers, "Directory of per-layer stores (<name><layer>.isof)");
  iso->add_option("--sign-mode", sign_mode_name, "Directions per eigenvector: both or convention")
      ->check(CLI::IsMember({"both", "convention"}))
      ->capture_default_str();
  iso->add_flag("--center", iso_center, "Subtract the column mean before scoring");
  iso->add_option("--local-k", iso_local_k,
                  "Cluster with k-means and centre each cluster before scoring (0: off)")
      ->capture_default_str();
  iso->add_option("--seeds", iso_seeds, "Comma-separated k-means seeds for --local-k")
      ->delimiter(',')
      ->capture_default_str();
  iso->add_option("-o,--out", out_path, "Write CSV here instead of stdout");

  // enhance
  auto* enh = app.add_subcommand("enhance", "Fit and apply an isotropy enhancement; writes "
                                            "<out>.isof and <out>.isot");
  EnhanceOptions enh_opts;
  std::string enh_store;
  enh->add_option("store", enh_store, "Input store")->required();
  add_enhance_options(enh, enh_opts, false);
  enh->add_option("-o,--out", out_path, "Output prefix")->required();
  enh->add_option("--sign-mode", sign_mode_name, "Directions per eigenvector: both or convention")
      ->check(CLI::IsMember({"both", "convention"}))
      ->capture_default_str();

  // eval-sts
  auto* sts = app.add_subcommand("eval-sts", "Spearman x100 of mean-pooled cosine similarity");
  EnhanceOptions sts_opts;
  sts_opts.mode = "none";
  std::string sts_store, sts_pairs, sts_sentences;
  sts->add_option("store", sts_store, "Token store with sentence_id metadata")->required();
  sts->add_option("--pairs", sts_pairs, "TSV: score<TAB>sentence_a<TAB>sentence_b")->required();
  sts->add_option("--sentences", sts_sentences, "TSV: id<TAB>text")->required();
  add_enhance_options(sts, sts_opts, true);
  sts->add_option("-o,--out", out_path, "Write CSV here instead of stdout");

  // knn-purity
  auto* knn = app.add_subcommand("knn-purity", "Share of k nearest same-token neighbours in the "
                                               "same structural group");
  EnhanceOptions knn_opts;
  knn_opts.mode = "none";
  std::string knn_store, knn_token;
  std::size_t knn_neighbors = 5;
  bool knn_all = false;
  knn->add_option("store", knn_store, "Token store with group_id metadata")->required();
  knn->add_option("--token", knn_token, "Target surface token, e.g. '.'")->required();
  knn->add_option("--neighbors", knn_neighbors, "Neighbours per occurrence")->capture_default_str();
  knn->add_flag("--all-rows", knn_all, "Draw neighbours from every grouped row");
  add_enhance_options(knn, knn_opts, true);
  knn->add_option("-o,--out", out_path, "Write CSV here instead of stdout");

  // tense-bias
  auto* tense = app.add_subcommand("tense-bias", "ST-SM / ST-DM / DT-SM verb distances before "
                                                 "and after enhancement");
  EnhanceOptions tense_opts;
  std::string tense_store;
  std::size_t tense_min = 10;
  tense->add_option("store", tense_store, "Store with lemma/tense/sense_id metadata")->required();
  tense->add_option("--min-occurrences", tense_min, "Minimum occurrences per qualifying sense")
      ->capture_default_str();
  add_enhance_options(tense, tense_opts, true);
  tense->add_option("-o,--out", out_path, "Write CSV here instead of stdout");

  // project2d
  auto* proj = app.add_subcommand("project2d", "Top-2 PCA coordinates with token frequency");
  EnhanceOptions proj_opts;
  proj_opts.mode = "none";
  std::string proj_store;
  proj->add_option("store", proj_store, "Input store")->required();
  add_enhance_options(proj, proj_opts, true);
  proj->add_option("-o,--out", out_path, "Write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  if (threads <= 0) {
    if (const char* env = std::getenv("ISOFORGE_THREADS")) threads = std::atoi(env);
  }
  set_thread_count(threads);

  try {
    const SignMode sign_mode = parse_sign_mode(sign_mode_name);

    if (*iso) {
      if (iso_layers.empty() == iso_store.empty()) {
        throw UsageError("give exactly one of <store> or --layers");
      }
      if (!iso_layers.empty()) {
        std::vector<EmbeddingStore> layers;
        for (const auto& p : layer_files(iso_layers)) layers.push_back(load_store(p));
        emit(layer_sweep_csv(layer_sweep(layers, sign_mode)), out_path, out);
        return kOk;
      }
      Matrix w = load_store(iso_store).to_matrix();
      if (iso_local_k > 0) {
        if (iso_seeds.empty()) throw UsageError("--seeds must not be empty");
        std::vector<double> logs, scores;
        for (auto seed : iso_seeds) {
          const auto r = local_isotropy(w, iso_local_k, seed, sign_mode);
          logs.push_back(r.log_score());
          scores.push_back(r.score);
        }
        const double mean_log = log_sum_exp(logs) - std::log(static_cast<double>(logs.size()));
        const auto s = summarize(scores);
        emit("k,runs,mean_score,std_score\n" + std::to_string(iso_local_k) + "," +
                 std::to_string(logs.size()) + "," + format_score(mean_log) + "," +
                 sci(s.stddev) + "\n",
             out_path, out);
        return kOk;
      }
      if (iso_center) w = center_columns(w).centered;
      emit("log_f_min,log_f_max,score,n_directions,sign_mode\n" +
               report_row(isotropy_score(w, sign_mode)) + "\n",
           out_path, out);
      return kOk;
    }

    if (*enh) {
      const auto input = load_store(enh_store);
      const Matrix w = input.to_matrix();
      const auto t = fit_transform(enh_opts, load_fit_matrix(enh_opts, input), enh_opts.seeds.empty()
                                                                                   ? 0
                                                                                   : enh_opts.seeds[0]);
      const Matrix transformed = apply(t, w);
      const auto result = EmbeddingStore::from_matrix(transformed, input.meta());
      const auto before = isotropy_score(w, sign_mode);
      const auto after = isotropy_score(transformed, sign_mode);

      std::vector<std::pair<fs::path, std::string>> files;
      files.emplace_back(out_path + ".isof", encode_matrix(result));
      if (result.has_meta()) {
        files.emplace_back(sidecar_path(out_path + ".isof"), encode_sidecar(*result.meta()));
      }
      files.emplace_back(out_path + ".isot", encode_transform(t));
      io::atomic_write(files);

      out << "stage,log_f_min,log_f_max,score,n_directions,sign_mode\n"
          << "before," << report_row(before) << "\n"
          << "after," << report_row(after) << "\n";
      return kOk;
    }

    if (*sts) {
      const auto input = load_store(sts_store);
      const auto ds = load_sts(sts_pairs, sts_sentences);
      const auto values =
          over_seeds(sts_opts, input, [&](const EmbeddingStore& s) { return eval_sts(s, ds); });
      const auto st = summarize(values);
      emit("mode,runs,mean,std\n" + sts_opts.mode + "," + std::to_string(values.size()) + "," +
               fmt("%.1f", st.mean) + "," + fmt("%.1f", st.stddev) + "\n",
           out_path, out);
      return kOk;
    }

    if (*knn) {
      const auto input = load_store(knn_store);
      const KnnOptions options{knn_all};
      const auto values = over_seeds(knn_opts, input, [&](const EmbeddingStore& s) {
        return knn_group_purity(s, knn_token, knn_neighbors, options);
      });
      const auto st = summarize(values);
      emit("token,mode,runs,mean,std\n" + knn_token + "," + knn_opts.mode + "," +
               std::to_string(values.size()) + "," + fmt("%.2f", st.mean) + "," +
               fmt("%.2f", st.stddev) + "\n",
           out_path, out);
      return kOk;
    }

    if (*tense) {
      const auto input = load_store(tense_store);
      const TenseOptions options{tense_min};
      std::string csv = "stage,runs,st_sm,st_sm_std,st_dm,st_dm_std,dt_sm,dt_sm_std,n_verbs,isotropy\n";
      auto add_stage = [&](const std::string& stage, const std::vector<TenseBiasReport>& reports) {
        std::vector<double> a, b, c, logs;
        for (const auto& r : reports) {
          a.push_back(r.st_sm);
          b.push_back(r.st_dm);
          c.push_back(r.dt_sm);
          logs.push_back(r.log_isotropy);
        }
        const auto sa = summarize(a), sb = summarize(b), sc = summarize(c);
        const double mean_log = log_sum_exp(logs) - std::log(static_cast<double>(logs.size()));
        csv += stage + "," + std::to_string(reports.size()) + "," + fmt("%.2f", sa.mean) + "," +
               fmt("%.2f", sa.stddev) + "," + fmt("%.2f", sb.mean) + "," + fmt("%.2f", sb.stddev) +
               "," + fmt("%.2f", sc.mean) + "," + fmt("%.2f", sc.stddev) + "," +
               std::to_string(reports.front().n_verbs) + "," + format_score(mean_log) + "\n";
      };
      add_stage("baseline", {tense_bias(input, options)});
      if (tense_opts.mode != "none") {
        if (tense_opts.seeds.empty()) throw UsageError("--seeds must not be empty");
        const Matrix fit_on = load_fit_matrix(tense_opts, input);
        std::vector<TenseBiasReport> reports;
        const std::size_t runs = seeded(tense_opts) ? tense_opts.seeds.size() : 1;
        for (std::size_t r = 0; r < runs; ++r) {
          const auto t = fit_transform(tense_opts, fit_on, tense_opts.seeds[r]);
          reports.push_back(tense_bias(apply(t, input), options));
        }
        add_stage(tense_opts.mode, reports);
      }
      emit(csv, out_path, out);
      return kOk;
    }

    if (*proj) {
      auto input = load_store(proj_store);
      if (proj_opts.mode != "none") {
        if (proj_opts.seeds.empty()) throw UsageError("--seeds must not be empty");
        input = apply(fit_transform(proj_opts, load_fit_matrix(proj_opts, input), proj_opts.seeds[0]),
                      input);
      }
      emit(project_2d_csv(project_2d(input)), out_path, out);
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::numeric ? kNumericError : kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace isoforge::cli
