#pragma once

// Dataset -> features -> split -> stack -> held-out evaluation, plus the
// ablation harness that reruns the same split under different fusions.

#include <string>
#include <vector>

#include <json.hpp>

#include "pluralism/analytics.hpp"
#include "pluralism/case_model.hpp"
#include "pluralism/context_encoder.hpp"
#include "pluralism/embedding.hpp"
#include "pluralism/fusion.hpp"
#include "pluralism/normative.hpp"
#include "pluralism/stack.hpp"

namespace pluralism {

/// Fused feature vector of one case.
inline FusedVector featurize_case(const Case& c, const EmbeddingTable* embeddings, const FusionConfig& fusion,
                                  const ContextEncoder& encoder) {
  FusionInputs in;
  if (fusion.uses(FeatureBlock::NormativePrior)) {
    if (!c.prior) throw DataError("case '" + c.case_id + "' has no prior scores");
    in.prior = prior_feature_vector(*c.prior);
  }
  if (fusion.uses(FeatureBlock::Supervector)) {
    if (embeddings == nullptr) throw ContractError("featurize: SV block selected but no embedding table given");
    in.embeddings = embeddings->at(c.case_id);
  }
  if (fusion.uses(FeatureBlock::Context)) in.context = encoder.encode(c.context);
  return assemble(fusion, in);
}

struct FeatureMatrix {
  Matrix x;
  FusionLayout layout;
};

inline FeatureMatrix featurize(const std::vector<Case>& cases, const std::vector<std::size_t>& rows,
                               const EmbeddingTable* embeddings, const FusionConfig& fusion,
                               const ContextEncoder& encoder) {
  FeatureMatrix out;
  for (std::size_t r : rows) {
    FusedVector v = featurize_case(cases[r], embeddings, fusion, encoder);
    if (out.layout.empty()) {
      out.layout = std::move(v.layout);
      out.x = Matrix(0, v.values.size());
    }
    out.x.append_row(v.values);
  }
  return out;
}

inline std::vector<int> subtheory_labels(const std::vector<Case>& cases) {
  std::vector<int> y;
  y.reserve(cases.size());
  for (const Case& c : cases) {
    if (!c.subtheory_label) throw DataError("case '" + c.case_id + "' has no ethics_subtheory label");
    y.push_back(static_cast<int>(index_of(*c.subtheory_label)));
  }
  return y;
}

struct CasePrediction {
  std::string case_id;
  std::size_t label = 0;
  StackPrediction prediction;
};

struct TrainRun {
  TrainedStack model;
  TrainTestSplit split;
  std::vector<CasePrediction> predictions;  // test rows, in split order
  EvalReport report;
  StackFitLog log;
};

inline std::string describe_fusion(const FusionConfig& f) {
  std::string out;
  for (std::size_t b = 0; b < 3; ++b) {
    if (!f.blocks[b]) continue;
    if (!out.empty()) out += "+";
    out += kBlockNames[b];
    if (b == 1 && !(f.embeddings[0] && f.embeddings[1] && f.embeddings[2])) {
      out += "(";
      for (std::size_t e = 0; e < 3; ++e) {
        if (f.embeddings[e]) out += "E" + std::to_string(e + 1);
      }
      out += ")";
    }
  }
  return out;
}

/// Stratified split, context vocabulary from the training rows only, stack
/// fit, and evaluation on the held-out rows.
inline TrainRun train_and_evaluate(const std::vector<Case>& cases, const EmbeddingTable* embeddings,
                                   const StackConfig& config, const FusionConfig& fusion) {
  config.validate();
  fusion.validate();
  const std::vector<int> y = subtheory_labels(cases);
  TrainRun run;
  run.split = train_test_split(y, kNumSubtheories, config.train_fraction, config.stratified, config.split_seed);
  if (run.split.test.empty()) throw DataError("train/test split left no test rows");

  std::vector<Case> train_cases;
  for (std::size_t r : run.split.train) train_cases.push_back(cases[r]);
  const ContextEncoder encoder = fit_context_encoder(train_cases);

  FeatureMatrix train = featurize(cases, run.split.train, embeddings, fusion, encoder);
  const std::vector<int> y_train = select(y, run.split.train);
  FeatureSpace space{fusion, train.layout, embeddings ? embeddings->dims() : kDefaultEmbeddingDims, encoder};
  run.model = stack_fit(train.x, y_train, config, std::move(space), kNumSubtheories, &run.log);

  std::vector<Distribution> raw;
  std::vector<std::size_t> labels;
  for (std::size_t r : run.split.test) {
    const FusedVector v = featurize_case(cases[r], embeddings, fusion, encoder);
    CasePrediction p{cases[r].case_id, static_cast<std::size_t>(y[r]), stack_predict(run.model, v.values)};
    raw.push_back(p.prediction.raw);
    labels.push_back(p.label);
    run.predictions.push_back(std::move(p));
  }
  run.report = evaluate(raw, labels, config.calibration_temperature, describe_fusion(fusion));
  return run;
}

inline nlohmann::json prediction_to_json(const CasePrediction& p) {
  const auto& pr = p.prediction;
  return {{"case_id", p.case_id},
          {"label", std::string(kSubtheoryNames[p.label])},
          {"label_index", p.label},
          {"predicted", std::string(kSubtheoryNames[pr.predicted])},
          {"predicted_index", pr.predicted},
          {"raw", pr.raw},
          {"calibrated", pr.calibrated},
          {"base", {{"forest", pr.base[0]}, {"boost", pr.base[1]}, {"linear", pr.base[2]}}}};
}

// ---------------------------------------------------------------------------
// Ablations

enum class AblationMode { Features, Transformers };

struct AblationArm {
  std::string name;
  FusionConfig fusion;
};

inline std::vector<AblationArm> ablation_arms(AblationMode mode) {
  if (mode == AblationMode::Features) {
    return {{"Full", {{true, true, true}, {true, true, true}}},
            {"SV+C", {{false, true, true}, {true, true, true}}},
            {"N+P+SV", {{true, true, false}, {true, true, true}}},
            {"SV", {{false, true, false}, {true, true, true}}}};
  }
  return {{"All", {{true, true, true}, {true, true, true}}},
          {"-E1", {{true, true, true}, {false, true, true}}},
          {"-E2", {{true, true, true}, {true, false, true}}},
          {"-E3", {{true, true, true}, {true, true, false}}}};
}

struct AblationRow {
  std::string name;
  EvalReport report;
  std::vector<std::string> test_ids;
};

/// One stack per arm, all with the same split and seeds.
inline std::vector<AblationRow> run_ablations(const std::vector<Case>& cases, const EmbeddingTable& embeddings,
                                              const StackConfig& config, AblationMode mode) {
  std::vector<AblationRow> rows;
  for (const AblationArm& arm : ablation_arms(mode)) {
    TrainRun run = train_and_evaluate(cases, &embeddings, config, arm.fusion);
    AblationRow row{arm.name, std::move(run.report), {}};
    row.report.config = arm.name;
    for (const auto& p : run.predictions) row.test_ids.push_back(p.case_id);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace pluralism
