#pragma once

// Case CSV / JSONL ingestion and serialization.
//
// CSV: UTF-8, exact header below, RFC-4180 quoting, list fields joined by ';'.
// JSONL: one object per line with the same field names; lists are arrays and
// the prior is {"alpha":..,"beta":..,"gamma":..} (or absent / null).

#include <array>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pluralism/case_model.hpp"
#include "pluralism/csv.hpp"
#include "pluralism/error.hpp"
#include "pluralism/text.hpp"

namespace pluralism {

enum class CaseFormat { Csv, Jsonl };

inline constexpr std::array<std::string_view, 22> kCaseCsvHeader = {
    "case_id",         "selftext",          "summary",           "active_agent",
    "passive_agent",   "agent_relationship", "action",           "domain",
    "ethical_issues",  "consequence",       "severity",          "utility",
    "duration",        "moral_intention",   "principles_upheld", "principles_violated",
    "moral_decision",  "alpha",             "beta",              "gamma",
    "normative_school", "ethics_subtheory"};

inline CaseFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return CaseFormat::Csv;
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return CaseFormat::Jsonl;
  throw ContractError("cannot infer case format from extension '" + ext + "' (use .csv or .jsonl)");
}

namespace detail {

[[noreturn]] inline void row_error(std::size_t row, std::string_view field, std::string_view what) {
  throw DataError("row " + std::to_string(row) + ", field '" + std::string(field) + "': " +
                  std::string(what));
}

inline void finish_labels(Case& c, std::size_t row, std::string_view school_text,
                          std::string_view subtheory_text) {
  school_text = text::trim(school_text);
  subtheory_text = text::trim(subtheory_text);
  if (!school_text.empty()) {
    c.school_label = parse_school(school_text);
    if (!c.school_label) row_error(row, "normative_school", "unknown school '" + std::string(school_text) + "'");
  }
  if (!subtheory_text.empty()) {
    c.subtheory_label = parse_subtheory(subtheory_text);
    if (!c.subtheory_label) {
      row_error(row, "ethics_subtheory", "unknown subtheory '" + std::string(subtheory_text) + "'");
    }
  }
  if (c.school_label && c.subtheory_label && school_of(*c.subtheory_label) != *c.school_label) {
    row_error(row, "ethics_subtheory", "subtheory does not belong to the labeled school");
  }
}

inline void finish_prior(Case& c, std::size_t row, std::optional<double> a, std::optional<double> b,
                         std::optional<double> g, bool any_present) {
  if (!any_present) return;
  if (!a) row_error(row, "alpha", "missing or not a number");
  if (!b) row_error(row, "beta", "missing or not a number");
  if (!g) row_error(row, "gamma", "missing or not a number");
  try {
    c.prior = PriorSimplex::from_scores(*a, *b, *g);
  } catch (const DataError& e) {
    row_error(row, "alpha", e.what());
  }
}

inline void check_unique(const std::vector<Case>& cases) {
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (!seen.insert(cases[i].case_id).second) {
      throw DataError("row " + std::to_string(i + 1) + ", field 'case_id': duplicate case_id '" +
                      cases[i].case_id + "'");
    }
  }
}

}  // namespace detail

inline std::vector<Case> read_cases_csv(std::istream& in) {
  const csv::Table table = csv::parse(in);
  if (table.records.empty()) throw DataError("row 0, field 'header': empty file");
  const csv::Record& header = table.records.front();
  if (header.size() != kCaseCsvHeader.size()) {
    throw DataError("row 0, field 'header': expected " + std::to_string(kCaseCsvHeader.size()) +
                    " columns, found " + std::to_string(header.size()));
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string_view name = header[i];
    if (i == 0 && name.starts_with("\xEF\xBB\xBF")) name.remove_prefix(3);
    if (name != kCaseCsvHeader[i]) {
      throw DataError("row 0, field '" + std::string(kCaseCsvHeader[i]) + "': header mismatch, found '" +
                      std::string(name) + "'");
    }
  }

  std::vector<Case> cases;
  cases.reserve(table.records.size() - 1);
  for (std::size_t r = 1; r < table.records.size(); ++r) {
    const csv::Record& f = table.records[r];
    if (f.size() != kCaseCsvHeader.size()) {
      detail::row_error(r, "*", "expected " + std::to_string(kCaseCsvHeader.size()) + " fields, found " +
                                    std::to_string(f.size()));
    }
    Case c;
    c.case_id = std::string(text::trim(f[0]));
    if (c.case_id.empty()) detail::row_error(r, "case_id", "empty");
    c.selftext = f[1];
    c.summary = f[2];
    ContextualFeatures& x = c.context;
    x.active_agent = f[3];
    x.passive_agent = f[4];
    x.agent_relationship = f[5];
    x.action = f[6];
    x.domain = f[7];
    x.ethical_issues = text::split_list(f[8]);
    x.consequence = f[9];
    x.severity = text::trim(f[10]);
    x.utility = text::trim(f[11]);
    x.duration = text::trim(f[12]);
    x.moral_intention = text::trim(f[13]);
    x.principles_upheld = text::split_list(f[14]);
    x.principles_violated = text::split_list(f[15]);
    c.moral_decision = f[16];

    const bool any_prior = !text::trim(f[17]).empty() || !text::trim(f[18]).empty() ||
                           !text::trim(f[19]).empty();
    detail::finish_prior(c, r, text::parse_double(f[17]), text::parse_double(f[18]),
                         text::parse_double(f[19]), any_prior);
    detail::finish_labels(c, r, f[20], f[21]);
    cases.push_back(std::move(c));
  }
  detail::check_unique(cases);
  return cases;
}

namespace detail {

inline std::string json_string(const nlohmann::json& obj, std::size_t row, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) row_error(row, key, "expected a string");
  return it->get<std::string>();
}

inline std::vector<std::string> json_list(const nlohmann::json& obj, std::size_t row, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (it->is_string()) return text::split_list(it->get<std::string>());
  if (!it->is_array()) row_error(row, key, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) row_error(row, key, "expected an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace detail

inline std::vector<Case> read_cases_jsonl(std::istream& in) {
  std::vector<Case> cases;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    ++row;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      detail::row_error(row, "*", std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) detail::row_error(row, "*", "expected a JSON object");

    Case c;
    c.case_id = std::string(text::trim(detail::json_string(obj, row, "case_id")));
    if (c.case_id.empty()) detail::row_error(row, "case_id", "empty");
    c.selftext = detail::json_string(obj, row, "selftext");
    c.summary = detail::json_string(obj, row, "summary");
    ContextualFeatures& x = c.context;
    x.active_agent = detail::json_string(obj, row, "active_agent");
    x.passive_agent = detail::json_string(obj, row, "passive_agent");
    x.agent_relationship = detail::json_string(obj, row, "agent_relationship");
    x.action = detail::json_string(obj, row, "action");
    x.domain = detail::json_string(obj, row, "domain");
    x.ethical_issues = detail::json_list(obj, row, "ethical_issues");
    x.consequence = detail::json_string(obj, row, "consequence");
    x.severity = detail::json_string(obj, row, "severity");
    x.utility = detail::json_string(obj, row, "utility");
    x.duration = detail::json_string(obj, row, "duration");
    x.moral_intention = detail::json_string(obj, row, "moral_intention");
    x.principles_upheld = detail::json_list(obj, row, "principles_upheld");
    x.principles_violated = detail::json_list(obj, row, "principles_violated");
    c.moral_decision = detail::json_string(obj, row, "moral_decision");

    if (auto it = obj.find("prior"); it != obj.end() && !it->is_null()) {
      if (!it->is_object()) detail::row_error(row, "prior", "expected an object");
      auto component = [&](const char* key) -> std::optional<double> {
        auto v = it->find(key);
        if (v == it->end() || !v->is_number()) return std::nullopt;
        return v->get<double>();
      };
      detail::finish_prior(c, row, component("alpha"), component("beta"), component("gamma"), true);
    }
    detail::finish_labels(c, row, detail::json_string(obj, row, "normative_school"),
                          detail::json_string(obj, row, "ethics_subtheory"));
    cases.push_back(std::move(c));
  }
  detail::check_unique(cases);
  return cases;
}

inline std::vector<Case> load_cases(const std::filesystem::path& path, CaseFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open case file: " + path.string());
  return format == CaseFormat::Csv ? read_cases_csv(in) : read_cases_jsonl(in);
}

inline std::vector<Case> load_cases(const std::filesystem::path& path) {
  return load_cases(path, format_from_path(path));
}

inline void write_cases_csv(std::ostream& out, const std::vector<Case>& cases) {
  csv::Record header(kCaseCsvHeader.begin(), kCaseCsvHeader.end());
  csv::write_record(out, header);
  for (const Case& c : cases) {
    const ContextualFeatures& x = c.context;
    auto comp = [&](std::size_t i) { return c.prior ? text::format_double((*c.prior)[i]) : std::string(); };
    csv::write_record(out, {c.case_id,
                            c.selftext,
                            c.summary,
                            x.active_agent,
                            x.passive_agent,
                            x.agent_relationship,
                            x.action,
                            x.domain,
                            text::join_list(x.ethical_issues),
                            x.consequence,
                            x.severity,
                            x.utility,
                            x.duration,
                            x.moral_intention,
                            text::join_list(x.principles_upheld),
                            text::join_list(x.principles_violated),
                            c.moral_decision,
                            comp(0),
                            comp(1),
                            comp(2),
                            c.school_label ? std::string(name_of(*c.school_label)) : std::string(),
                            c.subtheory_label ? std::string(name_of(*c.subtheory_label)) : std::string()});
  }
}

inline nlohmann::json case_to_json(const Case& c) {
  const ContextualFeatures& x = c.context;
  nlohmann::json obj = {
      {"case_id", c.case_id},
      {"selftext", c.selftext},
      {"summary", c.summary},
      {"active_agent", x.active_agent},
      {"passive_agent", x.passive_agent},
      {"agent_relationship", x.agent_relationship},
      {"action", x.action},
      {"domain", x.domain},
      {"ethical_issues", x.ethical_issues},
      {"consequence", x.consequence},
      {"severity", x.severity},
      {"utility", x.utility},
      {"duration", x.duration},
      {"moral_intention", x.moral_intention},
      {"principles_upheld", x.principles_upheld},
      {"principles_violated", x.principles_violated},
      {"moral_decision", c.moral_decision},
  };
  obj["prior"] = c.prior ? nlohmann::json{{"alpha", c.prior->alpha()},
                                          {"beta", c.prior->beta()},
                                          {"gamma", c.prior->gamma()}}
                         : nlohmann::json(nullptr);
  obj["normative_school"] =
      c.school_label ? nlohmann::json(std::string(name_of(*c.school_label))) : nlohmann::json(nullptr);
  obj["ethics_subtheory"] = c.subtheory_label ? nlohmann::json(std::string(name_of(*c.subtheory_label)))
                                              : nlohmann::json(nullptr);
  return obj;
}

inline void write_cases_jsonl(std::ostream& out, const std::vector<Case>& cases) {
  for (const Case& c : cases) out << case_to_json(c).dump() << '\n';
}

inline void save_cases(const std::filesystem::path& path, const std::vector<Case>& cases,
                       CaseFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write case file: " + path.string());
  if (format == CaseFormat::Csv) {
    write_cases_csv(out, cases);
  } else {
    write_cases_jsonl(out, cases);
  }
}

inline void save_cases(const std::filesystem::path& path, const std::vector<Case>& cases) {
  save_cases(path, cases, format_from_path(path));
}

inline nlohmann::json to_json(const DatasetReport& r) {
  nlohmann::json counts = nlohmann::json::object();
  for (std::size_t k = 0; k < kNumSubtheories; ++k) counts[std::string(kSubtheoryNames[k])] = r.subtheory_counts[k];
  nlohmann::json missing = nlohmann::json::object();
  for (const auto& [field, n] : r.missing_fields) missing[field] = n;
  return {{"n_cases", r.n_cases},
          {"subtheory_counts", std::move(counts)},
          {"unlabeled", r.unlabeled},
          {"missing_fields", std::move(missing)},
          {"balanced", r.balanced}};
}

}  // namespace pluralism
