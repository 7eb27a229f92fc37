#pragma once

// Binary decision trees and the level-wise growing engine shared by the
// forest (Gini, class-distribution leaves) and boosting (squared error,
// Newton-step leaves).
//
// Both criteria reduce to one score: a node with total weight W and per-slot
// target sums S_j scores sum_j S_j^2 / W. For classification the slot is the
// class and each row adds its weight, so the score is W minus the weighted
// Gini impurity; for regression there is one slot holding the residual sum,
// so the score is the SSE reduction term. Split gain is
// score(left) + score(right) - score(parent).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <type_traits>
#include <vector>

#include "pluralism/error.hpp"
#include "pluralism/matrix.hpp"
#include "pluralism/rng.hpp"

namespace pluralism {

struct TreeNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  std::vector<double> value;  // leaf payload

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const std::vector<double>& leaf_value(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const TreeNode& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
  }

  std::size_t depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      best = std::max(best, d[i]);
      if (!nodes[i].is_leaf()) {
        d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      }
    }
    return best;
  }

  bool operator==(const Tree&) const = default;
};

/// Column-major copy of a training matrix with every column argsorted once.
class PresortedColumns {
 public:
  explicit PresortedColumns(const Matrix& x) : n_(x.rows()), d_(x.cols()), rows_(n_ * d_), values_(n_ * d_) {
    std::vector<std::uint32_t> idx(n_);
    for (std::size_t f = 0; f < d_; ++f) {
      std::iota(idx.begin(), idx.end(), 0u);
      std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
      for (std::size_t k = 0; k < n_; ++k) {
        rows_[f * n_ + k] = idx[k];
        values_[f * n_ + k] = x(idx[k], f);
      }
    }
  }

  std::size_t rows() const noexcept { return n_; }
  std::size_t cols() const noexcept { return d_; }
  std::span<const std::uint32_t> order(std::size_t f) const { return {rows_.data() + f * n_, n_}; }
  std::span<const double> sorted_values(std::size_t f) const { return {values_.data() + f * n_, n_}; }

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<std::uint32_t> rows_;
  std::vector<double> values_;
};

enum class LeafRule { ClassDistribution, NewtonStep };

struct GrowParams {
  std::size_t max_depth = 6;
  double min_leaf = 1.0;               // minimum weighted count per child
  std::size_t features_per_node = 0;   // 0 = all features
  LeafRule leaf_rule = LeafRule::ClassDistribution;
  double leaf_l2 = 1.0;                // Newton leaves only
  double min_child_hessian = 0.0;      // Newton leaves only: minimum hessian mass per child
  std::uint64_t seed = 0;              // feature subsampling
};

inline constexpr double kHessianFloor = 1e-9;

/// Per-row training targets. Rows with zero weight are ignored.
struct GrowTargets {
  std::size_t n_slots = 1;             // classes, or 1 for regression
  std::span<const double> weight;      // bootstrap multiplicity or 1
  std::span<const std::uint32_t> slot; // class of each row (empty: slot 0)
  std::span<const double> value;       // per-row amount (empty: 1)
  std::span<const double> hessian;     // NewtonStep only
};

namespace detail {

struct NodeStats {
  double weight = 0.0;
  double hess = 0.0;
  double score = 0.0;  // sum S_j^2 / W
  double sum_sq = 0.0; // sum S_j^2
  std::vector<double> sums;
};

struct BestSplit {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

inline double split_threshold(double lo, double hi) {
  const double mid = lo + (hi - lo) * 0.5;
  return (mid >= hi || mid < lo) ? lo : mid;
}

}  // namespace detail

inline Tree grow_tree(const PresortedColumns& cols, const GrowTargets& targets, const GrowParams& params) {
  const std::size_t n = cols.rows();
  const std::size_t d = cols.cols();
  const std::size_t m = targets.n_slots;
  if (targets.weight.size() != n) throw ContractError("grow_tree: weight length mismatch");
  if (d == 0) throw ContractError("grow_tree: no features");

  // Per-row payload.
  std::vector<double> w(n);
  std::vector<double> amount(n);
  std::vector<double> hess(n, 0.0);
  std::vector<std::uint32_t> slot(n, 0);
  std::size_t n_active = 0;
  double total_weight = 0.0;
  bool integral = true;
  for (std::size_t r = 0; r < n; ++r) {
    w[r] = targets.weight[r];
    amount[r] = w[r] * (targets.value.empty() ? 1.0 : targets.value[r]);
    if (!targets.hessian.empty()) hess[r] = w[r] * targets.hessian[r];
    if (!targets.slot.empty()) slot[r] = targets.slot[r];
    if (w[r] > 0.0) ++n_active;
    total_weight += w[r];
    integral = integral && w[r] >= 0.0 && w[r] == std::floor(w[r]);
  }

  // Weights are usually whole numbers (bootstrap counts, 0/1 masks); then
  // every partial weight sum is exact and reciprocals come from a table.
  integral = integral && total_weight <= 1e7;
  std::vector<double> reciprocal;
  if (integral) {
    reciprocal.resize(static_cast<std::size_t>(total_weight) + 1, 0.0);
    for (std::size_t v = 1; v < reciprocal.size(); ++v) reciprocal[v] = 1.0 / static_cast<double>(v);
  }
  auto inv = [&](double v) { return integral ? reciprocal[static_cast<std::size_t>(v)] : 1.0 / v; };

  // Feature block f holds the active rows in ascending order of feature f,
  // grouped so that every frontier node owns the same [begin, begin+count)
  // range in each block. Partitioning is stable, so within a node rows stay
  // sorted.
  const std::size_t na = n_active;
  std::vector<std::uint32_t> order(d * na);
  std::vector<double> value(d * na);
  for (std::size_t f = 0; f < d; ++f) {
    const auto src_rows = cols.order(f);
    const auto src_vals = cols.sorted_values(f);
    std::size_t k = f * na;
    for (std::size_t j = 0; j < n; ++j) {
      if (w[src_rows[j]] > 0.0) {
        order[k] = src_rows[j];
        value[k] = src_vals[j];
        ++k;
      }
    }
  }
  std::vector<std::uint32_t> next_order(d * na);
  std::vector<double> next_value(d * na);

  struct Range {
    int node;
    std::size_t begin;
    std::size_t count;
  };

  const std::size_t m_try = (params.features_per_node == 0 || params.features_per_node >= d) ? d : params.features_per_node;
  const bool subsample = m_try < d;
  Rng rng(params.seed);

  Tree tree;
  tree.nodes.emplace_back();
  std::vector<Range> frontier = {{0, 0, na}};

  auto finalize_leaf = [&](int node_id, const detail::NodeStats& st) {
    TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
    node.feature = -1;
    if (params.leaf_rule == LeafRule::ClassDistribution) {
      node.value.assign(m, 0.0);
      if (st.weight > 0.0) {
        for (std::size_t j = 0; j < m; ++j) node.value[j] = st.sums[j] / st.weight;
      }
    } else {
      node.value = {st.sums[0] / (std::max(st.hess, kHessianFloor) + params.leaf_l2)};
    }
  };

  // Prefix scan of one feature within one node. Single-slot targets keep the
  // running left sum in a register.
  std::vector<double> left_sums(m);
  auto scan_feature = [&](const std::uint32_t* rows, const double* vals, std::size_t count,
                          const detail::NodeStats& st, detail::BestSplit& best, std::size_t f, double min_gain,
                          auto single_slot) {
    constexpr bool kSingle = decltype(single_slot)::value;
    if constexpr (!kSingle) std::fill(left_sums.begin(), left_sums.end(), 0.0);
    double wl = 0.0;
    double hl = 0.0;
    double lsq = 0.0;
    double lcross = 0.0;
    double lsum = 0.0;
    double last = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      const std::uint32_t r = rows[k];
      const double x = vals[k];
      if (wl > 0.0 && x > last) {
        const double wr = st.weight - wl;
        if (wl >= params.min_leaf && wr >= params.min_leaf && hl >= params.min_child_hessian &&
            st.hess - hl >= params.min_child_hessian) {
          const double sq_right = st.sum_sq - 2.0 * lcross + lsq;
          const double gain = lsq * inv(wl) + sq_right * inv(wr) - st.score;
          if (gain > best.gain && gain > min_gain) best = {gain, static_cast<int>(f), detail::split_threshold(last, x)};
        }
      }
      const double a = amount[r];
      if constexpr (kSingle) {
        lsum += a;
        lsq = lsum * lsum;
        lcross = st.sums[0] * lsum;
      } else {
        const std::uint32_t j = slot[r];
        double& sl = left_sums[j];
        lsq += a * (2.0 * sl + a);
        lcross += st.sums[j] * a;
        sl += a;
      }
      wl += w[r];
      hl += hess[r];
      last = x;
    }
  };

  std::vector<char> goes_left(n, 0);
  for (std::size_t depth = 0; !frontier.empty(); ++depth) {
    const std::size_t slots = frontier.size();
    std::vector<detail::NodeStats> stats(slots);
    std::vector<char> splittable(slots, 0);
    bool any_splittable = false;
    for (std::size_t s = 0; s < slots; ++s) {
      auto& st = stats[s];
      st.sums.assign(m, 0.0);
      for (std::size_t k = frontier[s].begin; k < frontier[s].begin + frontier[s].count; ++k) {
        const std::uint32_t r = order[k];
        st.weight += w[r];
        st.sums[slot[r]] += amount[r];
        st.hess += hess[r];
      }
      for (double v : st.sums) st.sum_sq += v * v;
      st.score = st.weight > 0.0 ? st.sum_sq / st.weight : 0.0;
      splittable[s] = depth < params.max_depth && st.weight >= 2.0 * params.min_leaf;
      any_splittable = any_splittable || splittable[s];
    }
    if (!any_splittable) {
      for (std::size_t s = 0; s < slots; ++s) finalize_leaf(frontier[s].node, stats[s]);
      break;
    }

    // Candidate features per node, drawn in frontier order.
    std::vector<char> candidate;
    if (subsample) {
      candidate.assign(slots * d, 0);
      for (std::size_t s = 0; s < slots; ++s) {
        if (!splittable[s]) continue;
        for (std::size_t f : rng.sample_without_replacement(d, m_try)) candidate[s * d + f] = 1;
      }
    }

    std::vector<detail::BestSplit> best(slots);
    for (std::size_t s = 0; s < slots; ++s) {
      if (!splittable[s]) continue;
      const auto& st = stats[s];
      const double min_gain = 1e-12 * std::max(1.0, st.score);
      for (std::size_t f = 0; f < d; ++f) {
        if (subsample && !candidate[s * d + f]) continue;
        const std::uint32_t* rows = order.data() + f * na + frontier[s].begin;
        const double* vals = value.data() + f * na + frontier[s].begin;
        if (m == 1) {
          scan_feature(rows, vals, frontier[s].count, st, best[s], f, min_gain, std::true_type{});
        } else {
          scan_feature(rows, vals, frontier[s].count, st, best[s], f, min_gain, std::false_type{});
        }
      }
    }

    // Apply splits; children are appended in frontier order (left, right).
    std::vector<Range> next;
    std::size_t cursor = 0;
    for (std::size_t s = 0; s < slots; ++s) {
      const Range& range = frontier[s];
      if (best[s].feature < 0) {
        finalize_leaf(range.node, stats[s]);
        continue;
      }
      const auto f = static_cast<std::size_t>(best[s].feature);
      std::size_t n_left = 0;
      for (std::size_t k = range.begin; k < range.begin + range.count; ++k) {
        const bool left = value[f * na + k] <= best[s].threshold;
        goes_left[order[f * na + k]] = left;
        n_left += left;
      }
      const int left_id = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& node = tree.nodes[static_cast<std::size_t>(range.node)];
      node.feature = best[s].feature;
      node.threshold = best[s].threshold;
      node.left = left_id;
      node.right = left_id + 1;
      // Every feature block gets the same layout: left rows, then right rows.
      // When the children are at the depth limit only block 0, which feeds
      // the leaf statistics, is needed.
      const std::size_t blocks = depth + 1 < params.max_depth ? d : 1;
      for (std::size_t g = 0; g < blocks; ++g) {
        std::size_t li = g * na + cursor;
        std::size_t ri = li + n_left;
        for (std::size_t k = g * na + range.begin; k < g * na + range.begin + range.count; ++k) {
          const std::uint32_t r = order[k];
          const std::size_t left = goes_left[r];
          const std::size_t dst = left ? li : ri;
          li += left;
          ri += 1 - left;
          next_order[dst] = r;
          next_value[dst] = value[k];
        }
      }
      next.push_back({left_id, cursor, n_left});
      next.push_back({left_id + 1, cursor + n_left, range.count - n_left});
      cursor += range.count;
    }
    order.swap(next_order);
    value.swap(next_value);
    frontier = std::move(next);
  }
  return tree;
}

}  // namespace pluralism
