#pragma once

// Semantic supervector: three sentence-embedding segments (E1, E2, E3)
// concatenated in fixed order. Embeddings come from a provider:
//   file  - JSONL embedding file (format below), e.g. written by the exporter
//   hash  - deterministic signed feature hashing, a stand-in for transformers
//
// Embedding file:
//   {"format":"ethics-embed","version":1,"dims":[d1,d2,d3]}
//   {"case_id":"...","e1":[...],"e2":[...],"e3":[...]}
//   ...

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pluralism/case_model.hpp"
#include "pluralism/error.hpp"
#include "pluralism/rng.hpp"
#include "pluralism/text.hpp"

namespace pluralism {

using EmbeddingDims = std::array<std::size_t, 3>;

inline constexpr EmbeddingDims kDefaultEmbeddingDims = {384, 768, 768};
inline constexpr std::string_view kEmbedFormat = "ethics-embed";
inline constexpr int kEmbedVersion = 1;

inline std::size_t total_width(const EmbeddingDims& dims) { return dims[0] + dims[1] + dims[2]; }

/// case_id -> (E1, E2, E3), stored as 32-bit floats.
class EmbeddingTable {
 public:
  using Segments = std::array<std::vector<float>, 3>;

  EmbeddingTable() : dims_(kDefaultEmbeddingDims) {}
  explicit EmbeddingTable(EmbeddingDims dims) : dims_(dims) {
    for (std::size_t d : dims) {
      if (d == 0) throw ContractError("embedding dims must be positive");
    }
  }

  const EmbeddingDims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool contains(const std::string& case_id) const { return rows_.contains(case_id); }

  void insert(const std::string& case_id, Segments segments) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (segments[k].size() != dims_[k]) {
        throw DataError("embedding for '" + case_id + "': e" + std::to_string(k + 1) + " has length " +
                        std::to_string(segments[k].size()) + ", expected " + std::to_string(dims_[k]));
      }
      for (float v : segments[k]) {
        if (!std::isfinite(v)) throw DataError("embedding for '" + case_id + "': non-finite value");
      }
    }
    rows_.insert_or_assign(case_id, std::move(segments));
  }

  const Segments& at(const std::string& case_id) const {
    const auto it = rows_.find(case_id);
    if (it == rows_.end()) throw DataError("no embedding for case_id '" + case_id + "'");
    return it->second;
  }

  const std::map<std::string, Segments>& rows() const noexcept { return rows_; }

  bool operator==(const EmbeddingTable&) const = default;

 private:
  EmbeddingDims dims_;
  std::map<std::string, Segments> rows_;
};

/// E1 || E2 || E3 as doubles.
inline std::vector<double> build_supervector(const EmbeddingTable& table, const std::string& case_id) {
  const auto& seg = table.at(case_id);
  std::vector<double> out;
  out.reserve(total_width(table.dims()));
  for (const auto& part : seg) out.insert(out.end(), part.begin(), part.end());
  return out;
}

/// Signed feature hashing of lowercase alphanumeric tokens, L2-normalized.
/// Text without tokens (including empty text) maps to the zero vector; so
/// does the rare case where colliding tokens cancel exactly.
inline std::vector<double> hash_embed(std::string_view text_in, std::size_t dim, std::uint64_t salt) {
  if (dim == 0) throw ContractError("hash_embed: dim must be positive");
  std::vector<double> v(dim, 0.0);
  const std::uint64_t salt_key = mix64(salt ^ 0xA0761D6478BD642FULL);
  for (const std::string& token : text::tokenize(text_in)) {
    const std::uint64_t h = mix64(fnv1a64(token) ^ salt_key);
    const std::size_t bucket = static_cast<std::size_t>(h % dim);
    v[bucket] += (h >> 63) ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Embedding file I/O

namespace detail {

inline void write_float_array(std::ostream& out, const std::vector<float>& values) {
  out << '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ',';
    // The double repr of a float reads back bit-exactly through a double parse.
    out << text::format_double(static_cast<double>(values[i]));
  }
  out << ']';
}

}  // namespace detail

inline void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  const auto& d = table.dims();
  out << R"({"format":")" << kEmbedFormat << R"(","version":)" << kEmbedVersion << R"(,"dims":[)" << d[0]
      << ',' << d[1] << ',' << d[2] << "]}\n";
  for (const auto& [id, seg] : table.rows()) {
    out << R"({"case_id":)" << nlohmann::json(id).dump();
    for (std::size_t k = 0; k < 3; ++k) {
      out << R"(,"e)" << (k + 1) << R"(":)";
      detail::write_float_array(out, seg[k]);
    }
    out << "}\n";
  }
}

inline void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write embedding file: " + path.string());
  write_embeddings(out, table);
}

inline EmbeddingTable read_embeddings(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!text::trim(line).empty()) return true;
    }
    return false;
  };
  if (!next_line()) throw DataError("embedding file: missing header line");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("embedding file header: invalid JSON: ") + e.what());
  }
  if (header.value("format", "") != kEmbedFormat) throw DataError("embedding file: format is not 'ethics-embed'");
  if (header.value("version", -1) != kEmbedVersion) {
    throw DataError("embedding file: unsupported version " + header.value("version", nlohmann::json()).dump());
  }
  const auto dims_json = header.find("dims");
  if (dims_json == header.end() || !dims_json->is_array() || dims_json->size() != 3) {
    throw DataError("embedding file header: dims must be an array of three counts");
  }
  EmbeddingDims dims{};
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& v = (*dims_json)[k];
    if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) {
      throw DataError("embedding file header: dims must be positive integers");
    }
    dims[k] = v.get<std::size_t>();
  }

  EmbeddingTable table(dims);
  while (next_line()) {
    const std::string where = "embedding file line " + std::to_string(line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("case_id") || !obj["case_id"].is_string()) {
      throw DataError(where + ": missing case_id");
    }
    const std::string id = obj["case_id"].get<std::string>();
    if (table.contains(id)) throw DataError(where + ": duplicate case_id '" + id + "'");
    EmbeddingTable::Segments seg;
    for (std::size_t k = 0; k < 3; ++k) {
      const std::string key = "e" + std::to_string(k + 1);
      const auto it = obj.find(key);
      if (it == obj.end() || !it->is_array()) throw DataError(where + ": missing array '" + key + "'");
      seg[k].reserve(it->size());
      for (const auto& x : *it) {
        if (!x.is_number()) throw DataError(where + ": non-numeric value in '" + key + "'");
        seg[k].push_back(static_cast<float>(x.get<double>()));
      }
    }
    try {
      table.insert(id, std::move(seg));
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return table;
}

inline EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file: " + path.string());
  return read_embeddings(in);
}

// ---------------------------------------------------------------------------
// Providers

enum class EmbeddingProviderKind { File, Hash, Http };

struct EmbeddingProviderSpec {
  EmbeddingProviderKind kind = EmbeddingProviderKind::Hash;
  EmbeddingDims dims = kDefaultEmbeddingDims;
  std::string source;  // path for File, URL for Http

  /// "hash", "hash:d1,d2,d3", an http(s):// URL, or a file path.
  static EmbeddingProviderSpec parse(std::string_view text_spec) {
    EmbeddingProviderSpec spec;
    if (text_spec == "hash") return spec;
    if (text_spec.starts_with("hash:")) {
      const auto parts = text::split_list(text_spec.substr(5), ',');
      if (parts.size() != 3) throw ContractError("hash provider expects hash:d1,d2,d3");
      for (std::size_t k = 0; k < 3; ++k) {
        const auto v = text::parse_double(parts[k]);
        if (!v || *v < 1 || *v != std::floor(*v)) throw ContractError("hash provider dims must be positive integers");
        spec.dims[k] = static_cast<std::size_t>(*v);
      }
      return spec;
    }
    if (text_spec.starts_with("http:") || text_spec.starts_with("https:")) {
      spec.kind = EmbeddingProviderKind::Http;
      spec.source = std::string(text_spec);
      return spec;
    }
    spec.kind = EmbeddingProviderKind::File;
    spec.source = std::string(text_spec);
    return spec;
  }

  std::string describe() const {
    switch (kind) {
      case EmbeddingProviderKind::Hash:
        return "hash:" + std::to_string(dims[0]) + "," + std::to_string(dims[1]) + "," + std::to_string(dims[2]);
      case EmbeddingProviderKind::File:
        return source;
      case EmbeddingProviderKind::Http:
        return source;
    }
    return {};
  }
};

/// Hash-provider segments for one case: E1 from selftext, E2 and E3 from the
/// summary (selftext when the summary is empty), with distinct salts.
inline EmbeddingTable::Segments hash_segments(const Case& c, const EmbeddingDims& dims) {
  const std::string& short_text = c.summary.empty() ? c.selftext : c.summary;
  EmbeddingTable::Segments seg;
  const std::array<const std::string*, 3> sources = {&c.selftext, &short_text, &short_text};
  for (std::size_t k = 0; k < 3; ++k) {
    const auto v = hash_embed(*sources[k], dims[k], k + 1);
    seg[k].assign(v.begin(), v.end());
  }
  return seg;
}

/// Materializes the embeddings for a dataset. File tables are loaded as-is
/// (missing ids surface when a supervector is requested); the http kind is
/// not available in this build.
inline EmbeddingTable provide_embeddings(const EmbeddingProviderSpec& spec, const std::vector<Case>& cases) {
  switch (spec.kind) {
    case EmbeddingProviderKind::File:
      return load_embeddings(spec.source);
    case EmbeddingProviderKind::Hash: {
      EmbeddingTable table(spec.dims);
      for (const Case& c : cases) table.insert(c.case_id, hash_segments(c, spec.dims));
      return table;
    }
    case EmbeddingProviderKind::Http:
      break;
  }
  throw ContractError("http embedding provider is disabled; export embeddings to a file instead");
}

}  // namespace pluralism
