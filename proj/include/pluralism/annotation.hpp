#pragma once

// Prior scoring through a chat-completion endpoint. The reply's first
// balanced-brace JSON object must carry alpha, beta and gamma; the scores are
// accepted under the same 0.02 renormalization tolerance as ingested priors.
// The auth token is read from the environment at request time and is never
// logged or stored in results.

#include <chrono>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "pluralism/case_model.hpp"
#include "pluralism/error.hpp"
#include "pluralism/taxonomy.hpp"

namespace pluralism {

/// A case could not be annotated; carries the last underlying cause.
class AnnotationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The environment is missing something required before any request.
class EnvironmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kDefaultTokenEnv = "ETHICS_LLM_TOKEN";

struct AnnotationConfig {
  std::string endpoint;  // full URL, e.g. https://host/v1/chat/completions
  std::string model = "deepseek-chat";
  std::string token_env = std::string(kDefaultTokenEnv);
  int max_retries = 3;
  double timeout_seconds = 30.0;
  double temperature = 0.0;

  void validate() const {
    if (endpoint.empty()) throw ContractError("annotation config: endpoint is required");
    if (max_retries < 0) throw ContractError("annotation config: max_retries must be >= 0");
    if (!(timeout_seconds > 0.0)) throw ContractError("annotation config: timeout must be > 0");
  }
};

inline std::string resolve_token(const AnnotationConfig& cfg) {
  const char* token = std::getenv(cfg.token_env.c_str());
  if (token == nullptr || *token == '\0') throw EnvironmentError("auth token variable " + cfg.token_env + " is not set");
  return token;
}

struct PromptTemplate {
  std::string system;
  std::string user;  // placeholders: {summary}, {subtheory_definitions}

  static PromptTemplate standard() {
    PromptTemplate t;
    t.system =
        "You are an expert in normative ethics. Consequentialism judges actions by their outcomes. "
        "Virtue ethics judges actions by the character and relationships they express. "
        "Deontology judges actions by duties, rules and rights. "
        "Score how strongly a case aligns with each of the three schools.";
    t.user =
        "Subtheories by school:\n{subtheory_definitions}\n\n"
        "Case:\n{summary}\n\n"
        "Reply with a single JSON object of the form "
        "{\"alpha\": <consequentialism>, \"beta\": <virtue ethics>, \"gamma\": <deontology>} "
        "where the three non-negative scores sum to 1.";
    return t;
  }
};

inline std::string subtheory_definitions() {
  std::string out;
  for (std::size_t k = 0; k < kNumSubtheories; ++k) {
    out += "- ";
    out += kSubtheoryNames[k];
    out += " (";
    out += kSchoolNames[k / kSubtheoriesPerSchool];
    out += "): ";
    out += kSubtheoryDescriptions[k];
    out += "\n";
  }
  return out;
}

namespace detail {

inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace detail

struct RenderedPrompt {
  std::string system;
  std::string user;
};

inline RenderedPrompt render_prompt(const PromptTemplate& tmpl, const Case& c) {
  RenderedPrompt out{tmpl.system, tmpl.user};
  detail::replace_all(out.user, "{subtheory_definitions}", subtheory_definitions());
  detail::replace_all(out.user, "{summary}", c.summary.empty() ? c.selftext : c.summary);
  return out;
}

/// First balanced {...} span (string literals respected) that parses as a
/// JSON object.
inline std::optional<nlohmann::json> extract_first_json_object(std::string_view reply) {
  for (std::size_t start = reply.find('{'); start != std::string_view::npos; start = reply.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < reply.size(); ++i) {
      const char ch = reply[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (ch == '\\') {
          escaped = true;
        } else if (ch == '"') {
          in_string = false;
        }
        continue;
      }
      if (ch == '"') {
        in_string = true;
      } else if (ch == '{') {
        ++depth;
      } else if (ch == '}' && --depth == 0) {
        auto parsed = nlohmann::json::parse(reply.substr(start, i - start + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
        break;
      }
    }
  }
  return std::nullopt;
}

/// Validates an {"alpha","beta","gamma"} object; throws DataError("invalid annotation: ...").
inline PriorSimplex scores_from_json(const nlohmann::json& obj) {
  std::array<double, 3> v{};
  const std::array<const char*, 3> keys = {"alpha", "beta", "gamma"};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto it = obj.find(keys[i]);
    if (it == obj.end() || !it->is_number()) {
      throw DataError(std::string("invalid annotation: missing numeric '") + keys[i] + "'");
    }
    v[i] = it->get<double>();
  }
  try {
    return PriorSimplex::from_scores(v[0], v[1], v[2], kPriorRenormTolerance);
  } catch (const DataError& e) {
    throw DataError(std::string("invalid annotation: ") + e.what());
  }
}

/// Content of choices[0].message.content in a chat-completion body.
inline std::string completion_text(const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw DataError("invalid annotation: response body is not JSON");
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw DataError("invalid annotation: response lacks choices[0].message.content");
  }
}

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ContractError("annotation endpoint must be an http(s) URL");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline nlohmann::json completion_request(const AnnotationConfig& cfg, const RenderedPrompt& prompt) {
  return {{"model", cfg.model},
          {"messages",
           nlohmann::json::array({{{"role", "system"}, {"content", prompt.system}},
                                  {{"role", "user"}, {"content", prompt.user}}})},
          {"temperature", cfg.temperature}};
}

/// One request-validate cycle, retried on transport failures and invalid
/// payloads: max_retries + 1 attempts in total.
inline PriorSimplex annotate_case(const AnnotationConfig& cfg, const PromptTemplate& tmpl, const Case& c) {
  cfg.validate();
  const std::string token = resolve_token(cfg);
  const Endpoint ep = split_endpoint(cfg.endpoint);
  const std::string body = completion_request(cfg, render_prompt(tmpl, c)).dump();

  httplib::Client client(ep.origin);
  const auto secs = static_cast<time_t>(cfg.timeout_seconds);
  const auto usecs = static_cast<time_t>((cfg.timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  const httplib::Headers headers = {{"Authorization", "Bearer " + token}};

  std::string last_cause = "no attempt made";
  const int attempts = cfg.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    auto res = client.Post(ep.path, headers, body, "application/json");
    if (!res) {
      last_cause = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_cause = "HTTP status " + std::to_string(res->status);
      continue;
    }
    try {
      const auto obj = extract_first_json_object(completion_text(res->body));
      if (!obj) throw DataError("invalid annotation: reply contains no JSON object");
      return scores_from_json(*obj);
    } catch (const DataError& e) {
      last_cause = e.what();
    }
  }
  throw AnnotationError("case '" + c.case_id + "': annotation failed after " + std::to_string(attempts) +
                        " attempts; last cause: " + last_cause);
}

struct AnnotationResult {
  std::string case_id;
  std::optional<PriorSimplex> prior;
  std::string error;  // empty on success

  bool ok() const noexcept { return prior.has_value(); }
};

/// Sequential batch in input order; request i starts no earlier than
/// start + i / rate_limit. Per-case failures are recorded, not thrown.
inline std::vector<AnnotationResult> annotate_dataset(const AnnotationConfig& cfg, const PromptTemplate& tmpl,
                                                      const std::vector<Case>& cases, double rate_limit) {
  cfg.validate();
  if (!(rate_limit > 0.0)) throw ContractError("annotate_dataset: rate limit must be > 0");
  resolve_token(cfg);
  std::vector<AnnotationResult> out;
  out.reserve(cases.size());
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto slot = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(static_cast<double>(i) / rate_limit));
    std::this_thread::sleep_until(slot);
    AnnotationResult r{cases[i].case_id, std::nullopt, {}};
    try {
      r.prior = annotate_case(cfg, tmpl, cases[i]);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace pluralism
