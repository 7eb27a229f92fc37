#pragma once

// Bagged decision forest: CART trees on bootstrap samples, Gini splits with
// per-node feature subsampling, class-distribution leaves averaged at
// prediction time.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pluralism/error.hpp"
#include "pluralism/matrix.hpp"
#include "pluralism/probability.hpp"
#include "pluralism/rng.hpp"
#include "pluralism/tree.hpp"

namespace pluralism {

struct ForestParams {
  std::size_t n_trees = 200;
  std::size_t max_depth = 12;
  std::size_t min_leaf = 1;
  double feature_fraction = 0.3;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_trees == 0 || max_depth == 0 || min_leaf == 0) throw ContractError("forest params: counts must be positive");
    if (!(feature_fraction > 0.0 && feature_fraction <= 1.0)) {
      throw ContractError("forest params: feature_fraction must be in (0, 1]");
    }
  }
  bool operator==(const ForestParams&) const = default;
};

struct ForestModel {
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::vector<Tree> trees;
  bool operator==(const ForestModel&) const = default;
};

/// Shared precondition check for all learners.
inline void check_training_inputs(const Matrix& x, std::span<const int> y, std::size_t n_classes) {
  if (x.rows() != y.size()) throw ContractError("training inputs: |X| != |y|");
  if (y.size() < 2) throw ContractError("training inputs: need at least 2 rows");
  if (x.cols() == 0) throw ContractError("training inputs: no features");
  if (n_classes < 2) throw ContractError("training inputs: need at least 2 classes");
  bool distinct = false;
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
      throw ContractError("training inputs: label " + std::to_string(label) + " out of range");
    }
    distinct = distinct || label != y[0];
  }
  if (!distinct) throw ContractError("degenerate labels: training set has a single class");
}

inline void check_width(std::size_t expected, std::size_t got, const char* who) {
  if (expected != got) {
    throw ContractError(std::string(who) + ": feature width " + std::to_string(got) + " != trained width " +
                        std::to_string(expected));
  }
}

/// Bootstrap multiplicities: n draws with replacement from [0, n).
inline std::vector<double> bootstrap_weights(std::size_t n, std::uint64_t seed) {
  std::vector<double> w(n, 0.0);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) w[static_cast<std::size_t>(rng.below(n))] += 1.0;
  return w;
}

inline std::uint64_t forest_tree_seed(std::uint64_t forest_seed, std::size_t tree) {
  return derive_seed(forest_seed, static_cast<std::uint64_t>(tree));
}

inline ForestModel forest_fit(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                              const ForestParams& params) {
  params.validate();
  check_training_inputs(x, y, n_classes);

  const PresortedColumns cols(x);
  std::vector<std::uint32_t> slots(y.begin(), y.end());

  GrowParams grow;
  grow.max_depth = params.max_depth;
  grow.min_leaf = static_cast<double>(params.min_leaf);
  grow.features_per_node = static_cast<std::size_t>(std::ceil(params.feature_fraction * static_cast<double>(x.cols())));
  grow.leaf_rule = LeafRule::ClassDistribution;

  ForestModel model;
  model.n_features = x.cols();
  model.n_classes = n_classes;
  model.trees.reserve(params.n_trees);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    const std::uint64_t tree_seed = forest_tree_seed(params.seed, t);
    const std::vector<double> weights = bootstrap_weights(x.rows(), derive_seed(tree_seed, "bootstrap"));
    grow.seed = derive_seed(tree_seed, "features");
    GrowTargets targets;
    targets.n_slots = n_classes;
    targets.weight = weights;
    targets.slot = slots;
    model.trees.push_back(grow_tree(cols, targets, grow));
  }
  return model;
}

/// Unweighted mean of the per-tree leaf distributions.
inline Distribution forest_predict(const ForestModel& model, std::span<const double> x) {
  check_width(model.n_features, x.size(), "forest_predict");
  Distribution p(model.n_classes, 0.0);
  for (const Tree& tree : model.trees) {
    const auto& leaf = tree.leaf_value(x);
    for (std::size_t k = 0; k < p.size(); ++k) p[k] += leaf[k];
  }
  for (double& v : p) v /= static_cast<double>(model.trees.size());
  return p;
}

}  // namespace pluralism
