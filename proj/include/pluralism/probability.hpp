#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace pluralism {

/// Probability vector over classes; entries >= 0 summing to 1.
using Distribution = std::vector<double>;

/// Numerically stable softmax (max-shifted).
inline Distribution softmax(std::span<const double> scores) {
  Distribution out(scores.size());
  if (scores.empty()) return out;
  const double top = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - top);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

/// Index of the first maximum.
inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline bool is_distribution(std::span<const double> p, double tol = 1e-9) {
  if (p.empty()) return false;
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
    total += v;
  }
  return std::abs(total - 1.0) <= tol;
}

}  // namespace pluralism
