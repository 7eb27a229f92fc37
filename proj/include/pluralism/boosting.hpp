#pragma once

// Multiclass gradient boosting with the softmax objective. Each round fits
// one regression tree per class to the residual y_ik - p_ik using
// squared-error splits; leaves hold the Newton step
//   sum(residual) / (max(sum(p (1 - p)), 1e-9) + leaf_l2)
// and raw scores accumulate with the learning rate.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pluralism/error.hpp"
#include "pluralism/forest.hpp"
#include "pluralism/matrix.hpp"
#include "pluralism/probability.hpp"
#include "pluralism/rng.hpp"
#include "pluralism/tree.hpp"

namespace pluralism {

struct BoostParams {
  std::size_t n_rounds = 150;
  std::size_t max_depth = 4;
  double learning_rate = 0.1;
  double leaf_l2 = 1.0;
  std::size_t min_leaf = 1;
  double min_child_hessian = 1.0;
  double subsample = 1.0;         // row fraction per round
  double feature_fraction = 1.0;  // per-node feature fraction
  std::uint64_t seed = 0;

  void validate() const {
    if (max_depth == 0 || min_leaf == 0) throw ContractError("boost params: counts must be positive");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ContractError("boost params: learning_rate must be in (0, 1]");
    if (!(leaf_l2 >= 0.0)) throw ContractError("boost params: leaf_l2 must be non-negative");
    if (!(min_child_hessian >= 0.0)) throw ContractError("boost params: min_child_hessian must be non-negative");
    if (!(subsample > 0.0 && subsample <= 1.0)) throw ContractError("boost params: subsample must be in (0, 1]");
    if (!(feature_fraction > 0.0 && feature_fraction <= 1.0)) {
      throw ContractError("boost params: feature_fraction must be in (0, 1]");
    }
  }
  bool operator==(const BoostParams&) const = default;
};

struct BoostModel {
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  double learning_rate = 0.1;
  std::vector<std::vector<Tree>> rounds;  // rounds[r][k]: class-k tree of round r
  bool operator==(const BoostModel&) const = default;
};

inline std::vector<double> boost_raw_scores(const BoostModel& model, std::span<const double> x) {
  check_width(model.n_features, x.size(), "boost_predict");
  std::vector<double> raw(model.n_classes, 0.0);
  for (const auto& round : model.rounds) {
    for (std::size_t k = 0; k < model.n_classes; ++k) raw[k] += model.learning_rate * round[k].leaf_value(x)[0];
  }
  return raw;
}

inline Distribution boost_predict(const BoostModel& model, std::span<const double> x) {
  return softmax(boost_raw_scores(model, x));
}

/// Mean multiclass log-loss of raw scores (row-major n x K).
inline double softmax_log_loss(const std::vector<double>& raw, std::span<const int> y, std::size_t n_classes) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const std::span<const double> row(raw.data() + i * n_classes, n_classes);
    double top = row[0];
    for (double v : row) top = std::max(top, v);
    double z = 0.0;
    for (double v : row) z += std::exp(v - top);
    total += (top + std::log(z)) - row[static_cast<std::size_t>(y[i])];
  }
  return total / static_cast<double>(y.size());
}

/// `loss_trace`, when given, receives the training log-loss before the first
/// round and after every round (n_rounds + 1 values).
inline BoostModel boost_fit(const Matrix& x, std::span<const int> y, std::size_t n_classes, const BoostParams& params,
                            std::vector<double>* loss_trace = nullptr) {
  params.validate();
  check_training_inputs(x, y, n_classes);
  const std::size_t n = x.rows();
  const std::size_t K = n_classes;

  BoostModel model;
  model.n_features = x.cols();
  model.n_classes = K;
  model.learning_rate = params.learning_rate;
  model.rounds.reserve(params.n_rounds);

  const PresortedColumns cols(x);
  std::vector<double> raw(n * K, 0.0);
  if (loss_trace) {
    loss_trace->clear();
    loss_trace->push_back(softmax_log_loss(raw, y, K));
  }

  GrowParams grow;
  grow.max_depth = params.max_depth;
  grow.min_leaf = static_cast<double>(params.min_leaf);
  grow.leaf_rule = LeafRule::NewtonStep;
  grow.leaf_l2 = params.leaf_l2;
  grow.min_child_hessian = params.min_child_hessian;
  if (params.feature_fraction < 1.0) {
    grow.features_per_node =
        static_cast<std::size_t>(std::ceil(params.feature_fraction * static_cast<double>(x.cols())));
  }

  std::vector<double> prob(n * K);
  std::vector<double> residual(n);
  std::vector<double> hessian(n);
  std::vector<double> weight(n, 1.0);
  for (std::size_t r = 0; r < params.n_rounds; ++r) {
    const std::uint64_t round_seed = derive_seed(params.seed, static_cast<std::uint64_t>(r));
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = softmax(std::span<const double>(raw.data() + i * K, K));
      std::copy(p.begin(), p.end(), prob.begin() + static_cast<std::ptrdiff_t>(i * K));
    }
    if (params.subsample < 1.0) {
      std::fill(weight.begin(), weight.end(), 0.0);
      Rng rng(derive_seed(round_seed, "rows"));
      const auto keep = static_cast<std::size_t>(std::ceil(params.subsample * static_cast<double>(n)));
      for (std::size_t i : rng.sample_without_replacement(n, keep)) weight[i] = 1.0;
    }

    std::vector<Tree> trees;
    trees.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = prob[i * K + k];
        residual[i] = (static_cast<std::size_t>(y[i]) == k ? 1.0 : 0.0) - p;
        hessian[i] = p * (1.0 - p);
      }
      GrowTargets targets;
      targets.n_slots = 1;
      targets.weight = weight;
      targets.value = residual;
      targets.hessian = hessian;
      grow.seed = derive_seed(round_seed, static_cast<std::uint64_t>(k));
      trees.push_back(grow_tree(cols, targets, grow));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = x.row(i);
      for (std::size_t k = 0; k < K; ++k) raw[i * K + k] += params.learning_rate * trees[k].leaf_value(row)[0];
    }
    model.rounds.push_back(std::move(trees));
    if (loss_trace) loss_trace->push_back(softmax_log_loss(raw, y, K));
  }
  return model;
}

}  // namespace pluralism
