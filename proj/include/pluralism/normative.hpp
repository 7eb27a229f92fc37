#pragma once

// Normative-prior feature block: the raw (alpha, beta, gamma) scores plus
// engineered plurality features (top-two margin, normalized entropy, top-two
// ratio, dominant school).

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "pluralism/case_model.hpp"

namespace pluralism {

inline constexpr double kTopRatioCap = 1e6;
inline constexpr std::size_t kPriorFeatureWidth = 9;

struct PriorFeatures {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double margin = 0.0;        // s(1) - s(2)
  double entropy_norm = 0.0;  // -sum p ln p / ln 3
  double top_ratio = 1.0;     // s(1) / s(2), capped
  NormativeSchool dominant = NormativeSchool::Consequentialism;
};

inline PriorFeatures derive_prior_features(const PriorSimplex& prior) {
  PriorFeatures f;
  f.alpha = prior.alpha();
  f.beta = prior.beta();
  f.gamma = prior.gamma();

  std::array<double, 3> sorted = prior.components();
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  f.margin = sorted[0] - sorted[1];
  f.top_ratio = sorted[1] > 0.0 ? std::min(sorted[0] / sorted[1], kTopRatioCap) : kTopRatioCap;

  double h = 0.0;
  for (double p : prior.components()) {
    if (p > 0.0) h -= p * std::log(p);
  }
  f.entropy_norm = std::clamp(h / std::log(3.0), 0.0, 1.0);

  // First maximum in canonical order wins ties.
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (prior[i] > prior[best]) best = i;
  }
  f.dominant = school_at(best);
  return f;
}

/// [alpha, beta, gamma, margin, entropy_norm, ln(top_ratio), onehot3(dominant)]
inline std::vector<double> prior_feature_vector(const PriorFeatures& f) {
  std::vector<double> v = {f.alpha, f.beta, f.gamma, f.margin, f.entropy_norm, std::log(f.top_ratio),
                           0.0,     0.0,    0.0};
  v[6 + index_of(f.dominant)] = 1.0;
  return v;
}

inline std::vector<double> prior_feature_vector(const PriorSimplex& prior) {
  return prior_feature_vector(derive_prior_features(prior));
}

}  // namespace pluralism
