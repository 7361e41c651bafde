#include "isoforge/store.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "isoforge/binary_io.hpp"
#include "isoforge/errors.hpp"

namespace isoforge {
namespace {

constexpr std::string_view kMagic = "ISOF";
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 1 + 4 + 4;

using ordered_json = nlohmann::ordered_json;

void validate_meta(const std::vector<TokenMeta>& meta) {
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  for (std::size_t i = 0; i < meta.size(); ++i) {
    const auto& m = meta[i];
    if (m.sentence_id < 0 || m.position < 0) {
      throw ValueError("metadata row " + std::to_string(i) +
                       ": sentence_id and position must be non-negative");
    }
    if (!seen.emplace(m.sentence_id, m.position).second) {
      throw ValueError("metadata row " + std::to_string(i) + ": duplicate (sentence_id=" +
                       std::to_string(m.sentence_id) + ", position=" +
                       std::to_string(m.position) + ")");
    }
    if (m.tense.has_value() != m.sense_id.has_value()) {
      throw ValueError("metadata row " + std::to_string(i) +
                       ": tense and sense_id must be present together");
    }
  }
}

ordered_json meta_to_json(const TokenMeta& m) {
  ordered_json j;
  j["token"] = m.token;
  j["sentence_id"] = m.sentence_id;
  j["position"] = m.position;
  if (m.lemma) j["lemma"] = *m.lemma;
  if (m.tense) j["tense"] = std::string(to_string(*m.tense));
  if (m.sense_id) j["sense_id"] = *m.sense_id;
  if (m.group_id) j["group_id"] = *m.group_id;
  if (m.frequency) j["frequency"] = *m.frequency;
  return j;
}

TokenMeta meta_from_json(const ordered_json& j, std::size_t line) {
  auto fail = [line](const std::string& why) -> FormatError {
    return FormatError("sidecar line " + std::to_string(line + 1) + ": " + why);
  };
  if (!j.is_object()) throw fail("expected a JSON object");
  auto need_int = [&](const char* key) -> std::int64_t {
    auto it = j.find(key);
    if (it == j.end()) throw fail(std::string("missing key '") + key + "'");
    if (!it->is_number_integer()) throw fail(std::string("'") + key + "' must be an integer");
    return it->get<std::int64_t>();
  };

  TokenMeta m;
  auto tok = j.find("token");
  if (tok == j.end() || !tok->is_string()) throw fail("missing string key 'token'");
  m.token = tok->get<std::string>();
  m.sentence_id = need_int("sentence_id");
  m.position = need_int("position");

  if (auto it = j.find("lemma"); it != j.end()) {
    if (!it->is_string()) throw fail("'lemma' must be a string");
    m.lemma = it->get<std::string>();
  }
  if (auto it = j.find("tense"); it != j.end()) {
    if (!it->is_string()) throw fail("'tense' must be a string");
    auto t = parse_tense(it->get<std::string>());
    if (!t) throw fail("'tense' must be one of past, present, other");
    m.tense = *t;
  }
  if (auto it = j.find("sense_id"); it != j.end()) {
    if (!it->is_string()) throw fail("'sense_id' must be a string");
    m.sense_id = it->get<std::string>();
  }
  if (auto it = j.find("group_id"); it != j.end()) {
    if (!it->is_number_integer()) throw fail("'group_id' must be an integer");
    m.group_id = it->get<std::int64_t>();
  }
  if (auto it = j.find("frequency"); it != j.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
      throw fail("'frequency' must be a non-negative integer");
    }
    m.frequency = it->get<std::uint64_t>();
  }
  return m;
}

std::vector<TokenMeta> parse_sidecar(const std::string& text, std::size_t expected_rows) {
  std::vector<TokenMeta> meta;
  meta.reserve(expected_rows);
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    if (line.empty()) {
      ++lineno;
      continue;
    }
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("sidecar line " + std::to_string(lineno + 1) + ": " + e.what());
    }
    meta.push_back(meta_from_json(j, lineno));
    ++lineno;
  }
  if (meta.size() != expected_rows) {
    throw FormatError("sidecar has " + std::to_string(meta.size()) + " records for " +
                      std::to_string(expected_rows) + " matrix rows");
  }
  return meta;
}

void check_finite(std::span<const float> data, std::size_t dim) {
  for (std::size_t idx = 0; idx < data.size(); ++idx) {
    if (!std::isfinite(data[idx])) {
      throw ValueError("non-finite value at row " + std::to_string(idx / dim) + ", column " +
                       std::to_string(idx % dim));
    }
  }
}

EmbeddingStore decode_matrix(std::string_view bytes) {
  io::ByteReader reader(bytes);
  reader.bytes(4, "magic");
  const auto version = reader.u8("version");
  if (version != kVersion) {
    throw FormatError("unsupported ISOF version " + std::to_string(version));
  }
  const std::uint64_t n = reader.u32("row count");
  const std::uint64_t d = reader.u32("dimension");
  if (n == 0 || d == 0) throw FormatError("ISOF header declares an empty matrix");

  const std::uint64_t payload = n * d * 4;
  if (reader.remaining() < payload) {
    throw TruncationError("payload holds " + std::to_string(reader.remaining()) +
                          " bytes, header requires " + std::to_string(payload));
  }
  if (reader.remaining() > payload) {
    throw FormatError("payload holds " + std::to_string(reader.remaining()) +
                      " bytes, header requires " + std::to_string(payload));
  }
  std::vector<float> data(n * d);
  for (auto& v : data) v = reader.f32("payload");
  check_finite(data, d);
  return EmbeddingStore(n, d, std::move(data));
}

EmbeddingStore decode_tsv(const std::string& text) {
  std::vector<float> data;
  std::size_t dim = 0;
  std::size_t rows = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t cols = 0;
    std::size_t start = 0;
    while (start <= line.size()) {
      auto end = line.find('\t', start);
      if (end == std::string::npos) end = line.size();
      float v = 0;
      const char* first = line.data() + start;
      const char* last = line.data() + end;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) {
        throw FormatError("TSV row " + std::to_string(rows) + ", column " +
                          std::to_string(cols) + ": not a real number");
      }
      data.push_back(v);
      ++cols;
      start = end + 1;
    }
    if (rows == 0) {
      dim = cols;
    } else if (cols != dim) {
      throw FormatError("TSV row " + std::to_string(rows) + " has " + std::to_string(cols) +
                        " columns, expected " + std::to_string(dim));
    }
    ++rows;
  }
  if (rows == 0) throw FormatError("TSV file holds no rows");
  check_finite(data, dim);
  return EmbeddingStore(rows, dim, std::move(data));
}

}  // namespace

std::string_view to_string(Tense t) {
  switch (t) {
    case Tense::past:
      return "past";
    case Tense::present:
      return "present";
    case Tense::other:
      return "other";
  }
  return "other";
}

std::optional<Tense> parse_tense(std::string_view s) {
  if (s == "past") return Tense::past;
  if (s == "present") return Tense::present;
  if (s == "other") return Tense::other;
  return std::nullopt;
}

EmbeddingStore::EmbeddingStore(std::size_t n_rows, std::size_t dim, std::vector<float> data,
                               std::optional<std::vector<TokenMeta>> meta)
    : n_rows_(n_rows), dim_(dim), data_(std::move(data)), meta_(std::move(meta)) {
  if (n_rows_ == 0 || dim_ == 0) throw ValueError("embedding store needs n_rows >= 1 and dim >= 1");
  if (data_.size() != n_rows_ * dim_) {
    throw ValueError("data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(n_rows_) + " x " + std::to_string(dim_));
  }
  check_finite(data_, dim_);
  if (meta_) {
    if (meta_->size() != n_rows_) {
      throw ValueError("metadata length " + std::to_string(meta_->size()) + " != n_rows " +
                       std::to_string(n_rows_));
    }
    validate_meta(*meta_);
  }
}

EmbeddingStore EmbeddingStore::from_matrix(const Matrix& m,
                                           std::optional<std::vector<TokenMeta>> meta) {
  std::vector<float> data(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) data[i] = static_cast<float>(m.data()[i]);
  return EmbeddingStore(m.rows(), m.cols(), std::move(data), std::move(meta));
}

Matrix EmbeddingStore::to_matrix() const {
  Matrix m(n_rows_, dim_);
  for (std::size_t i = 0; i < data_.size(); ++i) m.data()[i] = data_[i];
  return m;
}

std::filesystem::path sidecar_path(const std::filesystem::path& matrix_path) {
  auto p = matrix_path;
  p += ".meta.jsonl";
  return p;
}

std::string encode_matrix(const EmbeddingStore& store) {
  io::ByteWriter w;
  w.bytes(kMagic);
  w.u8(kVersion);
  w.u32(static_cast<std::uint32_t>(store.n_rows()));
  w.u32(static_cast<std::uint32_t>(store.dim()));
  for (float v : store.data()) w.f32(v);
  return w.release();
}

std::string encode_sidecar(const std::vector<TokenMeta>& meta) {
  std::string out;
  for (const auto& m : meta) {
    out += meta_to_json(m).dump();
    out += '\n';
  }
  return out;
}

EmbeddingStore load_store(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  EmbeddingStore store = [&] {
    if (bytes.size() >= 4 && std::string_view(bytes).substr(0, 4) == kMagic) {
      return decode_matrix(bytes);
    }
    if (path.extension() == ".tsv") return decode_tsv(bytes);
    throw FormatError(path.string() + ": missing ISOF magic");
  }();

  const auto side = sidecar_path(path);
  if (!std::filesystem::exists(side)) return store;
  auto meta = parse_sidecar(io::read_file(side), store.n_rows());
  std::vector<float> data(store.data().begin(), store.data().end());
  return EmbeddingStore(store.n_rows(), store.dim(), std::move(data), std::move(meta));
}

void save_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  if (store.n_rows() > UINT32_MAX || store.dim() > UINT32_MAX) {
    throw ValueError("store too large for the ISOF header");
  }
  std::vector<std::pair<std::filesystem::path, std::string>> files;
  files.emplace_back(path, encode_matrix(store));
  if (store.has_meta()) files.emplace_back(sidecar_path(path), encode_sidecar(*store.meta()));
  io::atomic_write(files);
  if (!store.has_meta()) {
    std::error_code ec;
    std::filesystem::remove(sidecar_path(path), ec);
  }
}

EmbeddingStore filter_rows(const EmbeddingStore& store, const RowPredicate& keep) {
  if (!store.has_meta()) throw MetadataRequiredError("filter_rows needs a metadata sidecar");
  const auto& meta = *store.meta();
  std::vector<float> data;
  std::vector<TokenMeta> kept;
  for (std::size_t i = 0; i < store.n_rows(); ++i) {
    if (!keep(meta[i])) continue;
    auto r = store.row(i);
    data.insert(data.end(), r.begin(), r.end());
    kept.push_back(meta[i]);
  }
  if (kept.empty()) throw EmptySelectionError("row filter matched no rows");
  const std::size_t n = kept.size();
  return EmbeddingStore(n, store.dim(), std::move(data), std::move(kept));
}

}  // namespace isoforge
