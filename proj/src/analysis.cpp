#include "isoforge/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "isoforge/binary_io.hpp"
#include "isoforge/errors.hpp"
#include "isoforge/kernels.hpp"
#include "isoforge/numeric.hpp"

namespace isoforge {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto end = line.find('\t', start);
    out.push_back(line.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

const std::vector<TokenMeta>& require_meta(const EmbeddingStore& store, const char* who) {
  if (!store.has_meta()) throw MetadataRequiredError(std::string(who) + " needs a metadata sidecar");
  return *store.meta();
}

Matrix gather_rows(const EmbeddingStore& store, std::span<const std::uint32_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(store.dim()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto src = store.row(rows[r]);
    for (std::size_t j = 0; j < src.size(); ++j) out(static_cast<Eigen::Index>(r), j) = src[j];
  }
  return out;
}

}  // namespace

StsDataset load_sts(const std::filesystem::path& pairs_tsv,
                    const std::filesystem::path& mapping_tsv) {
  std::unordered_map<std::string, std::int64_t> ids;
  for (const auto& line : read_lines(mapping_tsv)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("mapping line without a tab: " + line);
    std::int64_t id = 0;
    const char* first = line.data();
    auto [ptr, ec] = std::from_chars(first, first + tab, id);
    if (ec != std::errc() || ptr != first + tab) throw FormatError("bad sentence id in: " + line);
    ids.emplace(line.substr(tab + 1), id);  // first mapping of a text wins
  }

  StsDataset ds;
  const auto lines = read_lines(pairs_tsv);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto fields = split_tabs(lines[i]);
    if (i == 0 && !fields.empty() && fields[0] == "score") continue;
    if (fields.size() != 3) {
      throw FormatError("STS line " + std::to_string(i + 1) + ": expected 3 tab-separated fields");
    }
    double gold = 0.0;
    auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), gold);
    if (ec != std::errc() || ptr != fields[0].data() + fields[0].size()) {
      throw FormatError("STS line " + std::to_string(i + 1) + ": bad score");
    }
    if (!(gold >= 0.0 && gold <= 5.0)) {
      throw ValueError("STS line " + std::to_string(i + 1) + ": score outside [0, 5]");
    }
    auto lookup = [&](const std::string& text) {
      auto it = ids.find(text);
      if (it == ids.end()) throw NotFoundError("sentence not in mapping: " + text);
      return it->second;
    };
    ds.pairs.push_back({lookup(fields[1]), lookup(fields[2]), gold});
  }
  return ds;
}

SentenceIndex::SentenceIndex(const EmbeddingStore& store) {
  const auto& meta = require_meta(store, "sentence index");
  for (std::size_t i = 0; i < meta.size(); ++i) {
    rows_[meta[i].sentence_id].push_back(static_cast<std::uint32_t>(i));
  }
}

const std::vector<std::uint32_t>& SentenceIndex::rows(std::int64_t sentence_id) const {
  auto it = rows_.find(sentence_id);
  if (it == rows_.end()) throw NotFoundError("unknown sentence id " + std::to_string(sentence_id));
  return it->second;
}

namespace {

Vector mean_of_rows(const EmbeddingStore& store, std::span<const std::uint32_t> rows) {
  Vector mean = Vector::Zero(static_cast<Eigen::Index>(store.dim()));
  for (auto r : rows) {
    auto src = store.row(r);
    for (std::size_t j = 0; j < src.size(); ++j) mean(j) += src[j];
  }
  return mean / static_cast<double>(rows.size());
}

}  // namespace

Vector sentence_embedding(const EmbeddingStore& store, std::int64_t sentence_id) {
  return mean_of_rows(store, SentenceIndex(store).rows(sentence_id));
}

double eval_sts(const EmbeddingStore& store, const StsDataset& ds) {
  const SentenceIndex index(store);
  std::map<std::int64_t, Vector> cache;
  auto embed = [&](std::int64_t id) -> const Vector& {
    auto it = cache.find(id);
    if (it == cache.end()) it = cache.emplace(id, mean_of_rows(store, index.rows(id))).first;
    return it->second;
  };
  std::vector<double> predicted, gold;
  predicted.reserve(ds.pairs.size());
  gold.reserve(ds.pairs.size());
  for (const auto& p : ds.pairs) {
    predicted.push_back(cosine_similarity(vec_span(embed(p.sentence_a)), vec_span(embed(p.sentence_b))));
    gold.push_back(p.gold);
  }
  return 100.0 * spearman(predicted, gold);
}

double knn_group_purity(const EmbeddingStore& store, const std::string& target_token,
                        std::size_t k_neighbors, const KnnOptions& options) {
  const auto& meta = require_meta(store, "kNN purity");
  std::vector<std::uint32_t> queries, candidates;
  for (std::size_t i = 0; i < meta.size(); ++i) {
    const bool is_target = meta[i].token == target_token;
    if (is_target && !meta[i].group_id) {
      throw MetadataRequiredError("occurrence at row " + std::to_string(i) + " of '" +
                                  target_token + "' has no group_id");
    }
    if (is_target) queries.push_back(static_cast<std::uint32_t>(i));
    if (options.all_rows ? meta[i].group_id.has_value() : is_target) {
      candidates.push_back(static_cast<std::uint32_t>(i));
    }
  }
  if (queries.size() < 2) {
    throw CardinalityError("'" + target_token + "' occurs " + std::to_string(queries.size()) +
                           " times; need at least 2");
  }
  if (k_neighbors < 1 || k_neighbors >= candidates.size()) {
    throw CardinalityError("k = " + std::to_string(k_neighbors) + " needs fewer than " +
                           std::to_string(candidates.size()) + " candidates");
  }

  const Matrix dist = kernels::parallel::cross_sq_distances(gather_rows(store, queries),
                                                            gather_rows(store, candidates));
  double total = 0.0;
  std::vector<std::size_t> order;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    order.clear();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (candidates[c] != queries[q]) order.push_back(c);
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_neighbors),
                      order.end(), [&](std::size_t a, std::size_t b) {
                        const double da = dist(q, a), db = dist(q, b);
                        return da != db ? da < db : candidates[a] < candidates[b];
                      });
    std::size_t same = 0;
    const auto group = *meta[queries[q]].group_id;
    for (std::size_t t = 0; t < k_neighbors; ++t) {
      if (meta[candidates[order[t]]].group_id == group) ++same;
    }
    total += static_cast<double>(same) / static_cast<double>(k_neighbors);
  }
  return 100.0 * total / static_cast<double>(queries.size());
}

TenseBiasReport tense_bias(const EmbeddingStore& store, const TenseOptions& options) {
  const auto& meta = require_meta(store, "tense bias");

  std::map<std::string, std::vector<std::uint32_t>> by_lemma;
  for (std::size_t i = 0; i < meta.size(); ++i) {
    if (!meta[i].sense_id) continue;
    if (!meta[i].lemma) {
      throw InsufficientAnnotationError("sense-annotated row " + std::to_string(i) + " ('" +
                                        meta[i].token + "') has no lemma");
    }
    by_lemma[*meta[i].lemma].push_back(static_cast<std::uint32_t>(i));
  }

  struct Accumulator {
    double sum = 0.0;
    std::size_t count = 0;
    void add(double total, std::size_t n) {
      if (n == 0) return;
      sum += total / static_cast<double>(n);
      ++count;
    }
  } st_sm, st_dm, dt_sm;

  TenseBiasReport report;
  std::vector<std::uint32_t> analysed;
  std::string closest;
  std::size_t closest_senses = 0;

  for (const auto& [lemma, rows] : by_lemma) {
    std::map<std::string, std::size_t> sense_counts;
    for (auto r : rows) ++sense_counts[*meta[r].sense_id];
    std::set<std::string> senses;
    for (const auto& [sense, count] : sense_counts) {
      if (count >= options.min_sense_occurrences) senses.insert(sense);
    }
    if (closest.empty() || senses.size() > closest_senses) {
      closest = lemma;
      closest_senses = senses.size();
    }
    if (senses.size() < 2) continue;

    std::vector<std::uint32_t> kept;
    for (auto r : rows) {
      if (senses.count(*meta[r].sense_id)) kept.push_back(r);
    }
    const Matrix x = gather_rows(store, kept);
    const Matrix sq = kernels::parallel::cross_sq_distances(x, x);

    for (std::size_t a = 0; a < kept.size(); ++a) {
      const auto& ma = meta[kept[a]];
      double s1 = 0, s2 = 0, s3 = 0;
      std::size_t n1 = 0, n2 = 0, n3 = 0;
      for (std::size_t b = 0; b < kept.size(); ++b) {
        if (a == b) continue;
        const auto& mb = meta[kept[b]];
        const bool same_tense = ma.tense == mb.tense;
        const bool same_sense = ma.sense_id == mb.sense_id;
        const double d = std::sqrt(sq(a, b));
        if (same_tense && same_sense) {
          s1 += d;
          ++n1;
        } else if (same_tense) {
          s2 += d;
          ++n2;
        } else if (same_sense) {
          s3 += d;
          ++n3;
        }
      }
      st_sm.add(s1, n1);
      st_dm.add(s2, n2);
      dt_sm.add(s3, n3);
    }
    analysed.insert(analysed.end(), kept.begin(), kept.end());
    ++report.n_verbs;
  }

  if (report.n_verbs == 0) {
    throw InsufficientAnnotationError(
        "no lemma has two senses with at least " + std::to_string(options.min_sense_occurrences) +
        " occurrences" + (closest.empty() ? std::string() : " (closest: '" + closest + "')"));
  }
  if (st_sm.count == 0 || st_dm.count == 0 || dt_sm.count == 0) {
    throw InsufficientAnnotationError(
        "annotated verbs lack occurrence pairs for every tense/sense condition");
  }
  report.st_sm = st_sm.sum / static_cast<double>(st_sm.count);
  report.st_dm = st_dm.sum / static_cast<double>(st_dm.count);
  report.dt_sm = dt_sm.sum / static_cast<double>(dt_sm.count);

  std::sort(analysed.begin(), analysed.end());
  const auto iso = isotropy_score(gather_rows(store, analysed));
  report.isotropy = iso.score;
  report.log_isotropy = iso.log_score();
  return report;
}

std::vector<ProjectedPoint> project_2d(const EmbeddingStore& store) {
  if (store.n_rows() < 2) throw CardinalityError("projection needs at least two rows");
  const auto centered = center_columns(store.to_matrix()).centered;
  const auto basis = principal_components(centered, 2);

  std::vector<ProjectedPoint> out(store.n_rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto row = centered.row(static_cast<Eigen::Index>(i));
    if (basis.size() > 0) out[i].x = row.dot(basis.components.row(0));
    if (basis.size() > 1) out[i].y = row.dot(basis.components.row(1));
    if (store.has_meta()) out[i].frequency = (*store.meta())[i].frequency.value_or(0);
  }
  return out;
}

std::string project_2d_csv(const std::vector<ProjectedPoint>& points) {
  std::string out = "x,y,frequency\n";
  char buf[96];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%llu\n", p.x, p.y,
                  static_cast<unsigned long long>(p.frequency));
    out += buf;
  }
  return out;
}

}  // namespace isoforge
