#pragma once

// Run configuration shared by the command-line commands. A JSON file supplies
// any subset of the fields below; command-line flags are applied on top.
// Component seeds are never configured directly, they are derived from the
// global seed (see StackConfig::seed_all).
//
//   {
//     "data": "cases.jsonl", "embeddings": "hash" | "hash:d1,d2,d3" | path,
//     "seed": 42, "out": "out", "ablation": "features" | "transformers",
//     "stack": {"folds", "temperature", "train_fraction", "stratified",
//               "forest": {...}, "boost": {...}, "linear": {...}, "meta": {...}},
//     "fusion": {"blocks": [N_P, SV, C], "embeddings": [E1, E2, E3]},
//     "synth": {"overlap", "cases_per_subtheory", "embedding_dims": [d1, d2, d3]},
//     "annotation": {"endpoint", "model", "token_env", "max_retries",
//                    "timeout_seconds", "rate_limit"},
//     "analyze": {"model", "predictions", "coords", "top_k", "bin_width"}
//   }

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "pluralism/annotation.hpp"
#include "pluralism/error.hpp"
#include "pluralism/fusion.hpp"
#include "pluralism/stack.hpp"
#include "pluralism/synthetic.hpp"

namespace pluralism {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct AnalyzeOptions {
  std::string model;        // default <out>/model.json
  std::string predictions;  // default <out>/predictions.jsonl
  std::string coords;       // optional external case_id,x,y file
  std::size_t top_k = 5;
  double bin_width = 0.1;
  bool operator==(const AnalyzeOptions&) const = default;
};

struct RunConfig {
  std::string data;
  std::string embeddings = "hash";
  std::uint64_t seed = 42;
  std::string out = "out";
  std::string ablation = "features";
  StackConfig stack;
  FusionConfig fusion;
  SynthConfig synth;
  AnnotationConfig annotation;
  double rate_limit = 2.0;  // requests per second
  AnalyzeOptions analyze;

  /// Stack settings with every component seed derived from `seed`.
  StackConfig seeded_stack() const {
    StackConfig s = stack;
    s.seed_all(seed);
    return s;
  }

  SynthConfig seeded_synth() const {
    SynthConfig s = synth;
    s.seed = seed;
    return s;
  }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ContractError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) throw ContractError("config: unknown key '" + where + "." + key + "'");
  }
}

template <class T>
void read_opt(const json& obj, const char* key, T& dst, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!it->is_number_unsigned()) throw ContractError("");
    } else if constexpr (std::is_same_v<T, int>) {
      if (!it->is_number_integer()) throw ContractError("");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw ContractError("");
    }
    dst = it->get<T>();
  } catch (const std::exception&) {
    throw ContractError("config: '" + where + "." + key + "' has the wrong type");
  }
}

inline void read_forest(const json& j, ForestParams& p) {
  reject_unknown(j, {"n_trees", "max_depth", "min_leaf", "feature_fraction"}, "stack.forest");
  read_opt(j, "n_trees", p.n_trees, "stack.forest");
  read_opt(j, "max_depth", p.max_depth, "stack.forest");
  read_opt(j, "min_leaf", p.min_leaf, "stack.forest");
  read_opt(j, "feature_fraction", p.feature_fraction, "stack.forest");
}

inline void read_boost(const json& j, BoostParams& p, const std::string& where) {
  reject_unknown(j,
                 {"n_rounds", "max_depth", "learning_rate", "leaf_l2", "min_leaf", "min_child_hessian", "subsample",
                  "feature_fraction"},
                 where);
  read_opt(j, "n_rounds", p.n_rounds, where);
  read_opt(j, "max_depth", p.max_depth, where);
  read_opt(j, "learning_rate", p.learning_rate, where);
  read_opt(j, "leaf_l2", p.leaf_l2, where);
  read_opt(j, "min_leaf", p.min_leaf, where);
  read_opt(j, "min_child_hessian", p.min_child_hessian, where);
  read_opt(j, "subsample", p.subsample, where);
  read_opt(j, "feature_fraction", p.feature_fraction, where);
}

inline void read_linear(const json& j, LinearParams& p) {
  reject_unknown(j, {"lambda", "epochs"}, "stack.linear");
  read_opt(j, "lambda", p.lambda, "stack.linear");
  read_opt(j, "epochs", p.epochs, "stack.linear");
}

inline json forest_json(const ForestParams& p) {
  return {{"n_trees", p.n_trees}, {"max_depth", p.max_depth}, {"min_leaf", p.min_leaf},
          {"feature_fraction", p.feature_fraction}};
}

inline json boost_json(const BoostParams& p) {
  return {{"n_rounds", p.n_rounds},
          {"max_depth", p.max_depth},
          {"learning_rate", p.learning_rate},
          {"leaf_l2", p.leaf_l2},
          {"min_leaf", p.min_leaf},
          {"min_child_hessian", p.min_child_hessian},
          {"subsample", p.subsample},
          {"feature_fraction", p.feature_fraction}};
}

}  // namespace detail

/// Applies a parsed config object on top of `cfg`. Unknown keys and wrongly
/// typed values are rejected.
inline void apply_config_json(RunConfig& cfg, const nlohmann::json& j) {
  using detail::read_opt;
  detail::reject_unknown(j,
                         {"data", "embeddings", "seed", "out", "ablation", "stack", "fusion", "synth", "annotation",
                          "analyze"},
                         "");
  read_opt(j, "data", cfg.data, "");
  read_opt(j, "embeddings", cfg.embeddings, "");
  read_opt(j, "seed", cfg.seed, "");
  read_opt(j, "out", cfg.out, "");
  read_opt(j, "ablation", cfg.ablation, "");

  if (const auto it = j.find("stack"); it != j.end()) {
    const auto& s = *it;
    detail::reject_unknown(s,
                           {"folds", "temperature", "train_fraction", "stratified", "forest", "boost", "linear",
                            "meta"},
                           "stack");
    read_opt(s, "folds", cfg.stack.folds, "stack");
    read_opt(s, "temperature", cfg.stack.calibration_temperature, "stack");
    read_opt(s, "train_fraction", cfg.stack.train_fraction, "stack");
    read_opt(s, "stratified", cfg.stack.stratified, "stack");
    if (s.contains("forest")) detail::read_forest(s["forest"], cfg.stack.forest);
    if (s.contains("boost")) detail::read_boost(s["boost"], cfg.stack.boost, "stack.boost");
    if (s.contains("linear")) detail::read_linear(s["linear"], cfg.stack.linear);
    if (s.contains("meta")) detail::read_boost(s["meta"], cfg.stack.meta, "stack.meta");
  }
  if (const auto it = j.find("fusion"); it != j.end()) {
    detail::reject_unknown(*it, {"blocks", "embeddings"}, "fusion");
    read_opt(*it, "blocks", cfg.fusion.blocks, "fusion");
    read_opt(*it, "embeddings", cfg.fusion.embeddings, "fusion");
  }
  if (const auto it = j.find("synth"); it != j.end()) {
    detail::reject_unknown(*it, {"overlap", "cases_per_subtheory", "embedding_dims"}, "synth");
    read_opt(*it, "overlap", cfg.synth.overlap, "synth");
    read_opt(*it, "cases_per_subtheory", cfg.synth.cases_per_subtheory, "synth");
    read_opt(*it, "embedding_dims", cfg.synth.embedding_dims, "synth");
  }
  if (const auto it = j.find("annotation"); it != j.end()) {
    detail::reject_unknown(*it, {"endpoint", "model", "token_env", "max_retries", "timeout_seconds", "rate_limit"},
                           "annotation");
    auto& a = cfg.annotation;
    read_opt(*it, "endpoint", a.endpoint, "annotation");
    read_opt(*it, "model", a.model, "annotation");
    read_opt(*it, "token_env", a.token_env, "annotation");
    read_opt(*it, "max_retries", a.max_retries, "annotation");
    read_opt(*it, "timeout_seconds", a.timeout_seconds, "annotation");
    read_opt(*it, "rate_limit", cfg.rate_limit, "annotation");
  }
  if (const auto it = j.find("analyze"); it != j.end()) {
    detail::reject_unknown(*it, {"model", "predictions", "coords", "top_k", "bin_width"}, "analyze");
    auto& a = cfg.analyze;
    read_opt(*it, "model", a.model, "analyze");
    read_opt(*it, "predictions", a.predictions, "analyze");
    read_opt(*it, "coords", a.coords, "analyze");
    read_opt(*it, "top_k", a.top_k, "analyze");
    read_opt(*it, "bin_width", a.bin_width, "analyze");
  }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path.string());
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ContractError("config file is not valid JSON: " + path.string());
  RunConfig cfg;
  apply_config_json(cfg, j);
  return cfg;
}

/// Full effective configuration, including the derived component seeds. The
/// auth token itself is never part of it, only the variable name.
inline nlohmann::json to_json(const RunConfig& cfg) {
  const StackConfig s = cfg.seeded_stack();
  return {{"data", cfg.data},
          {"embeddings", cfg.embeddings},
          {"seed", cfg.seed},
          {"out", cfg.out},
          {"ablation", cfg.ablation},
          {"stack",
           {{"folds", s.folds},
            {"temperature", s.calibration_temperature},
            {"train_fraction", s.train_fraction},
            {"stratified", s.stratified},
            {"forest", detail::forest_json(s.forest)},
            {"boost", detail::boost_json(s.boost)},
            {"linear", {{"lambda", s.linear.lambda}, {"epochs", s.linear.epochs}}},
            {"meta", detail::boost_json(s.meta)}}},
          {"derived_seeds",
           {{"split", s.split_seed},
            {"folds", s.fold_seed},
            {"forest", s.forest.seed},
            {"boost", s.boost.seed},
            {"linear", s.linear.seed},
            {"meta", s.meta.seed}}},
          {"fusion", {{"blocks", cfg.fusion.blocks}, {"embeddings", cfg.fusion.embeddings}}},
          {"synth",
           {{"overlap", cfg.synth.overlap},
            {"cases_per_subtheory", cfg.synth.cases_per_subtheory},
            {"embedding_dims", cfg.synth.embedding_dims}}},
          {"annotation",
           {{"endpoint", cfg.annotation.endpoint},
            {"model", cfg.annotation.model},
            {"token_env", cfg.annotation.token_env},
            {"max_retries", cfg.annotation.max_retries},
            {"timeout_seconds", cfg.annotation.timeout_seconds},
            {"rate_limit", cfg.rate_limit}}},
          {"analyze",
           {{"model", cfg.analyze.model},
            {"predictions", cfg.analyze.predictions},
            {"coords", cfg.analyze.coords},
            {"top_k", cfg.analyze.top_k},
            {"bin_width", cfg.analyze.bin_width}}}};
}

}  // namespace pluralism
