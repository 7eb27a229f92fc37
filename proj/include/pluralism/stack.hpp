#pragma once

// Stacked generalization over three base learners (forest, boosting, linear
// max-margin). Out-of-fold base probabilities (3 x K columns, in that learner
// order) train a boosting meta-learner; bases are then refit on the full
// training set for inference. Every fold standardizes with a scaler fit on
// its own training rows only.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pluralism/boosting.hpp"
#include "pluralism/calibration.hpp"
#include "pluralism/context_encoder.hpp"
#include "pluralism/error.hpp"
#include "pluralism/forest.hpp"
#include "pluralism/fusion.hpp"
#include "pluralism/linear_svm.hpp"
#include "pluralism/matrix.hpp"
#include "pluralism/probability.hpp"
#include "pluralism/rng.hpp"
#include "pluralism/taxonomy.hpp"

namespace pluralism {

inline constexpr int kStackFormatVersion = 1;
inline constexpr std::size_t kNumBaseLearners = 3;

struct StackConfig {
  std::size_t folds = 5;
  ForestParams forest;
  BoostParams boost;
  LinearParams linear;
  BoostParams meta{.n_rounds = 100, .max_depth = 3, .learning_rate = 0.1};
  double calibration_temperature = 0.6;
  double train_fraction = 0.8;
  bool stratified = true;
  std::uint64_t split_seed = 0;
  std::uint64_t fold_seed = 0;

  void validate() const {
    if (folds < 2) throw ContractError("stack config: folds must be >= 2");
    if (!(calibration_temperature > 0.0)) throw ContractError("stack config: calibration_temperature must be > 0");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ContractError("stack config: train_fraction must be in (0, 1)");
    forest.validate();
    boost.validate();
    linear.validate();
    meta.validate();
  }

  /// Fans one global seed out to every component.
  void seed_all(std::uint64_t global_seed) {
    split_seed = derive_seed(global_seed, "split");
    fold_seed = derive_seed(global_seed, "folds");
    forest.seed = derive_seed(global_seed, "forest");
    boost.seed = derive_seed(global_seed, "boost");
    linear.seed = derive_seed(global_seed, "linear");
    meta.seed = derive_seed(global_seed, "meta");
  }

  bool operator==(const StackConfig&) const = default;
};

/// Everything needed to turn a case into features and features into a
/// calibrated distribution.
struct TrainedStack {
  int format_version = kStackFormatVersion;
  std::size_t n_classes = kNumSubtheories;
  std::vector<std::string> class_names;
  FusionConfig fusion;
  FusionLayout layout;
  EmbeddingDims embedding_dims = kDefaultEmbeddingDims;
  ContextEncoder encoder;
  Scaler scaler;
  ForestModel forest;
  BoostModel boost;
  LinearModel linear;
  BoostModel meta;
  double temperature = 0.6;

  std::size_t feature_width() const { return layout_width(layout); }
  bool operator==(const TrainedStack&) const = default;
};

struct StackPrediction {
  std::array<Distribution, kNumBaseLearners> base;
  Distribution raw;         // meta-learner output
  Distribution calibrated;  // after temperature scaling
  std::size_t predicted = 0;
};

/// Fit instrumentation: lets callers verify the out-of-fold construction.
struct StackFitLog {
  std::vector<std::size_t> fold_of_row;
  std::vector<std::vector<std::size_t>> fold_training_rows;  // per fold
  std::vector<std::size_t> meta_writes;                       // per row
  Matrix meta_features;
};

// ---------------------------------------------------------------------------
// Splitting

/// Stratified k-fold assignment. Within each class, rows are shuffled and
/// dealt round-robin, continuing the deal where the previous class stopped so
/// fold sizes stay balanced.
inline std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t n_classes, std::size_t folds,
                                                 std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t i = 0; i < y.size(); ++i) by_class[static_cast<std::size_t>(y[i])].push_back(i);
  std::vector<std::size_t> fold_of(y.size(), 0);
  std::size_t deal = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto& rows = by_class[c];
    if (rows.empty()) continue;
    if (rows.size() < folds) {
      throw DataError("insufficient class support for stratified folding: class " + std::to_string(c) + " has " +
                      std::to_string(rows.size()) + " rows, need " + std::to_string(folds));
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    rng.shuffle(rows);
    for (std::size_t r : rows) fold_of[r] = deal++ % folds;
  }
  return fold_of;
}

struct TrainTestSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class shuffled split taking round(train_fraction * n_c) rows of each
/// class for training (at least one row on each side when n_c >= 2). Index
/// lists come back sorted. With stratified = false the whole set is shuffled
/// and cut once.
inline TrainTestSplit train_test_split(std::span<const int> y, std::size_t n_classes, double train_fraction,
                                       bool stratified, std::uint64_t seed) {
  TrainTestSplit split;
  auto cut = [&](std::vector<std::size_t> rows, std::uint64_t s) {
    Rng rng(s);
    rng.shuffle(rows);
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows.size())));
    if (rows.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
    split.train.insert(split.train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
  };
  if (stratified) {
    std::vector<std::vector<std::size_t>> by_class(n_classes);
    for (std::size_t i = 0; i < y.size(); ++i) by_class[static_cast<std::size_t>(y[i])].push_back(i);
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (!by_class[c].empty()) cut(by_class[c], derive_seed(seed, static_cast<std::uint64_t>(c)));
    }
  } else {
    std::vector<std::size_t> all(y.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    cut(all, seed);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

// ---------------------------------------------------------------------------
// Fit / predict

struct BaseModels {
  ForestModel forest;
  BoostModel boost;
  LinearModel linear;
};

inline BaseModels fit_bases(const Matrix& scaled, std::span<const int> y, std::size_t n_classes,
                            const StackConfig& config, std::uint64_t salt) {
  ForestParams fp = config.forest;
  BoostParams bp = config.boost;
  LinearParams lp = config.linear;
  if (salt != 0) {
    fp.seed = derive_seed(fp.seed, salt);
    bp.seed = derive_seed(bp.seed, salt);
    lp.seed = derive_seed(lp.seed, salt);
  }
  return {forest_fit(scaled, y, n_classes, fp), boost_fit(scaled, y, n_classes, bp), linear_fit(scaled, y, n_classes, lp)};
}

inline std::array<Distribution, kNumBaseLearners> predict_bases(const ForestModel& forest, const BoostModel& boost,
                                                                const LinearModel& linear,
                                                                std::span<const double> scaled_row) {
  return {forest_predict(forest, scaled_row), boost_predict(boost, scaled_row), linear_predict(linear, scaled_row)};
}

inline std::vector<double> meta_row(const std::array<Distribution, kNumBaseLearners>& base) {
  std::vector<double> row;
  for (const auto& p : base) row.insert(row.end(), p.begin(), p.end());
  return row;
}

/// Feature metadata carried into the artifact.
struct FeatureSpace {
  FusionConfig fusion;
  FusionLayout layout;
  EmbeddingDims embedding_dims = kDefaultEmbeddingDims;
  ContextEncoder encoder;
};

inline TrainedStack stack_fit(const Matrix& features, std::span<const int> y, const StackConfig& config,
                              FeatureSpace space, std::size_t n_classes = kNumSubtheories,
                              StackFitLog* log = nullptr) {
  config.validate();
  check_training_inputs(features, y, n_classes);
  if (!space.layout.empty() && layout_width(space.layout) != features.cols()) {
    throw ContractError("stack_fit: feature width does not match the fusion layout");
  }
  if (space.layout.empty()) space.layout = {Segment{"X", 0, features.cols()}};

  const std::size_t n = features.rows();
  const std::size_t K = n_classes;
  const auto fold_of = stratified_folds(y, K, config.folds, config.fold_seed);

  Matrix meta_x(n, kNumBaseLearners * K);
  std::vector<std::size_t> writes(n, 0);
  std::vector<std::vector<std::size_t>> fold_training(config.folds);

  for (std::size_t f = 0; f < config.folds; ++f) {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> held_out;
    for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? held_out : train_rows).push_back(i);
    if (held_out.empty()) continue;

    const Matrix fold_x = features.select_rows(train_rows);
    const std::vector<int> fold_y = select(std::vector<int>(y.begin(), y.end()), train_rows);
    const Scaler fold_scaler = standardize_fit(fold_x);
    const BaseModels models = fit_bases(fold_scaler.apply(fold_x), fold_y, K, config, f + 1);

    for (std::size_t i : held_out) {
      const auto row = meta_row(predict_bases(models.forest, models.boost, models.linear, fold_scaler.apply(features.row(i))));
      std::copy(row.begin(), row.end(), meta_x.row(i).begin());
      ++writes[i];
    }
    fold_training[f] = std::move(train_rows);
  }

  TrainedStack model;
  model.n_classes = K;
  for (std::size_t k = 0; k < K; ++k) {
    model.class_names.emplace_back(K == kNumSubtheories ? std::string(kSubtheoryNames[k]) : "class_" + std::to_string(k));
  }
  model.fusion = space.fusion;
  model.layout = std::move(space.layout);
  model.embedding_dims = space.embedding_dims;
  model.encoder = std::move(space.encoder);
  model.temperature = config.calibration_temperature;
  model.meta = boost_fit(meta_x, y, K, config.meta);

  model.scaler = standardize_fit(features);
  BaseModels full = fit_bases(model.scaler.apply(features), y, K, config, 0);
  model.forest = std::move(full.forest);
  model.boost = std::move(full.boost);
  model.linear = std::move(full.linear);

  if (log) {
    log->fold_of_row = fold_of;
    log->fold_training_rows = std::move(fold_training);
    log->meta_writes = std::move(writes);
    log->meta_features = std::move(meta_x);
  }
  return model;
}

inline StackPrediction stack_predict(const TrainedStack& model, std::span<const double> features) {
  check_width(model.feature_width(), features.size(), "stack_predict");
  StackPrediction out;
  const auto scaled = model.scaler.apply(features);
  out.base = predict_bases(model.forest, model.boost, model.linear, scaled);
  out.raw = boost_predict(model.meta, meta_row(out.base));
  out.calibrated = calibrate(out.raw, model.temperature);
  out.predicted = argmax(out.calibrated);
  return out;
}

}  // namespace pluralism
