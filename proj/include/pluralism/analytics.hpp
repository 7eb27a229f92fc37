#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pluralism/calibration.hpp"
#include "pluralism/case_model.hpp"
#include "pluralism/error.hpp"
#include "pluralism/probability.hpp"
#include "pluralism/taxonomy.hpp"

namespace pluralism {

inline constexpr int kReportSchemaVersion = 1;

/// Shannon entropy in nats; divided by ln K when `normalized`.
inline double entropy(std::span<const double> dist, bool normalized = false) {
  double h = 0.0;
  for (double p : dist) {
    if (p > 0.0) h -= p * std::log(p);
  }
  if (!normalized) return h;
  return dist.size() > 1 ? h / std::log(static_cast<double>(dist.size())) : 0.0;
}

using CountMatrix = std::vector<std::vector<std::size_t>>;
using RealMatrix = std::vector<std::vector<double>>;

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  std::string config;
  std::size_t n = 0;
  double exact_match_accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassScores> per_class;
  CountMatrix confusion;  // rows: true label, columns: predicted
  double mean_entropy_raw = 0.0;
  double mean_entropy_calibrated = 0.0;
  double mean_entropy_raw_normalized = 0.0;
  double mean_entropy_calibrated_normalized = 0.0;
  double temperature = 1.0;
};

/// Accuracy and macro F1 recomputed from a confusion matrix. Macro F1 is the
/// unweighted mean over all K classes; a class with precision + recall = 0
/// contributes 0.
inline void score_confusion(EvalReport& r) {
  const std::size_t K = r.confusion.size();
  r.per_class.assign(K, {});
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t k = 0; k < K; ++k) {
    std::size_t row = 0;
    std::size_t col = 0;
    for (std::size_t j = 0; j < K; ++j) {
      row += r.confusion[k][j];
      col += r.confusion[j][k];
    }
    const double tp = static_cast<double>(r.confusion[k][k]);
    ClassScores& s = r.per_class[k];
    s.support = row;
    s.precision = col > 0 ? tp / static_cast<double>(col) : 0.0;
    s.recall = row > 0 ? tp / static_cast<double>(row) : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    correct += r.confusion[k][k];
    total += row;
  }
  r.exact_match_accuracy = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  double f1 = 0.0;
  for (const auto& s : r.per_class) f1 += s.f1;
  r.macro_f1 = K > 0 ? f1 / static_cast<double>(K) : 0.0;
}

/// `preds` are raw (uncalibrated) distributions; calibrated entropies use
/// `temperature`.
inline EvalReport evaluate(const std::vector<Distribution>& preds, std::span<const std::size_t> labels,
                           double temperature = 1.0, std::string config = {}) {
  if (preds.size() != labels.size()) throw ContractError("evaluate: predictions and labels differ in length");
  if (preds.empty()) throw ContractError("evaluate: empty prediction set");
  const std::size_t K = preds.front().size();
  EvalReport r;
  r.config = std::move(config);
  r.n = preds.size();
  r.temperature = temperature;
  r.confusion.assign(K, std::vector<std::size_t>(K, 0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].size() != K) throw ContractError("evaluate: predictions differ in class count");
    if (labels[i] >= K) throw ContractError("evaluate: label out of range");
    ++r.confusion[labels[i]][argmax(preds[i])];
    const auto cal = calibrate(preds[i], temperature);
    r.mean_entropy_raw += entropy(preds[i]);
    r.mean_entropy_calibrated += entropy(cal);
    r.mean_entropy_raw_normalized += entropy(preds[i], true);
    r.mean_entropy_calibrated_normalized += entropy(cal, true);
  }
  const double n = static_cast<double>(r.n);
  r.mean_entropy_raw /= n;
  r.mean_entropy_calibrated /= n;
  r.mean_entropy_raw_normalized /= n;
  r.mean_entropy_calibrated_normalized /= n;
  score_confusion(r);
  return r;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t k = 0; k < r.per_class.size(); ++k) {
    const auto& s = r.per_class[k];
    per_class.push_back({{"class", k < kNumSubtheories && r.per_class.size() == kNumSubtheories
                                       ? std::string(kSubtheoryNames[k])
                                       : std::to_string(k)},
                         {"precision", s.precision},
                         {"recall", s.recall},
                         {"f1", s.f1},
                         {"support", s.support}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"config", r.config},
          {"n", r.n},
          {"exact_match_accuracy", r.exact_match_accuracy},
          {"macro_f1", r.macro_f1},
          {"per_class", std::move(per_class)},
          {"confusion", r.confusion},
          {"temperature", r.temperature},
          {"mean_entropy_raw", r.mean_entropy_raw},
          {"mean_entropy_calibrated", r.mean_entropy_calibrated},
          {"mean_entropy_raw_normalized", r.mean_entropy_raw_normalized},
          {"mean_entropy_calibrated_normalized", r.mean_entropy_calibrated_normalized}};
}

// ---------------------------------------------------------------------------
// Overlap and bridge theories

/// O[i][j] = (c_ij + c_ji) / (n_i + n_j) off the diagonal, n_i = row total.
inline RealMatrix overlap_matrix(const CountMatrix& confusion) {
  const std::size_t K = confusion.size();
  std::vector<double> row_total(K, 0.0);
  for (std::size_t i = 0; i < K; ++i) {
    if (confusion[i].size() != K) throw ContractError("overlap_matrix: confusion matrix is not square");
    for (std::size_t v : confusion[i]) row_total[i] += static_cast<double>(v);
  }
  RealMatrix o(K, std::vector<double>(K, 0.0));
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = i + 1; j < K; ++j) {
      const double denom = row_total[i] + row_total[j];
      const double v = denom > 0.0 ? static_cast<double>(confusion[i][j] + confusion[j][i]) / denom : 0.0;
      o[i][j] = v;
      o[j][i] = v;
    }
  }
  return o;
}

struct Bridge {
  std::size_t i = 0;
  std::size_t j = 0;
  double score = 0.0;
  bool operator==(const Bridge&) const = default;
};

/// Top-k unordered pairs (i < j) by score; zero scores are excluded and ties
/// fall back to the pair order (i, j).
inline std::vector<Bridge> bridge_theories(const RealMatrix& o, std::size_t top_k) {
  std::vector<Bridge> pairs;
  for (std::size_t i = 0; i < o.size(); ++i) {
    for (std::size_t j = i + 1; j < o.size(); ++j) {
      if (o[i][j] > 0.0) pairs.push_back({i, j, o[i][j]});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Bridge& a, const Bridge& b) { return a.score > b.score; });
  if (pairs.size() > top_k) pairs.resize(top_k);
  return pairs;
}

// ---------------------------------------------------------------------------
// Confidence stratification

struct ConfidenceBin {
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
  double coverage = 0.0;
  std::optional<double> accuracy;  // empty bin: undefined
};

using ConfidenceStrata = std::vector<ConfidenceBin>;

/// Bins [0,w), [w,2w), ..., [1-w,1] over top-1 confidence.
inline ConfidenceStrata confidence_strata(const std::vector<Distribution>& preds, std::span<const std::size_t> labels,
                                          double bin_width = 0.1) {
  if (preds.size() != labels.size()) throw ContractError("confidence_strata: predictions and labels differ in length");
  if (!(bin_width > 0.0 && bin_width <= 1.0)) throw ContractError("confidence_strata: bin width must be in (0, 1]");
  const double bins_real = 1.0 / bin_width;
  const auto n_bins = static_cast<std::size_t>(std::llround(bins_real));
  if (std::abs(bins_real - static_cast<double>(n_bins)) > 1e-9) {
    throw ContractError("confidence_strata: bin width must divide 1 evenly");
  }
  ConfidenceStrata strata(n_bins);
  std::vector<std::size_t> correct(n_bins, 0);
  for (std::size_t b = 0; b < n_bins; ++b) {
    strata[b].low = static_cast<double>(b) / static_cast<double>(n_bins);
    strata[b].high = static_cast<double>(b + 1) / static_cast<double>(n_bins);
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const std::size_t top = argmax(preds[i]);
    const double c = preds[i][top];
    // The small nudge keeps exact bin edges like 0.3 out of the bin below.
    const auto b = std::min(static_cast<std::size_t>(std::floor(c * static_cast<double>(n_bins) + 1e-9)), n_bins - 1);
    ++strata[b].count;
    if (top == labels[i]) ++correct[b];
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    auto& bin = strata[b];
    bin.coverage = preds.empty() ? 0.0 : static_cast<double>(bin.count) / static_cast<double>(preds.size());
    if (bin.count > 0) bin.accuracy = static_cast<double>(correct[b]) / static_cast<double>(bin.count);
  }
  return strata;
}

// ---------------------------------------------------------------------------
// Simplex geometry

/// Sums the five subtheory probabilities of each school.
inline PriorSimplex school_aggregate(std::span<const double> dist) {
  if (dist.size() != kNumSubtheories) throw ContractError("school_aggregate: expected 15 probabilities");
  std::array<double, kNumSchools> s{};
  for (std::size_t k = 0; k < kNumSubtheories; ++k) s[k / kSubtheoriesPerSchool] += dist[k];
  return PriorSimplex::exact(s[0], s[1], s[2]);
}

/// alpha -> (0, 0), gamma -> (1, 0), beta -> (1/2, sqrt(3)/2).
inline std::pair<double, double> simplex_coords(const PriorSimplex& p) {
  return {p.gamma() + 0.5 * p.beta(), p.beta() * (std::sqrt(3.0) / 2.0)};
}

}  // namespace pluralism
