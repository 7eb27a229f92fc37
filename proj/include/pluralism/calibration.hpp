#pragma once

#include <cmath>
#include <span>

#include "pluralism/error.hpp"
#include "pluralism/probability.hpp"

namespace pluralism {

/// Temperature scaling in the probability domain:
///   p_i' = p_i^(1/T) / sum_j p_j^(1/T).
/// Zero entries stay zero; argmax and support are preserved for all T > 0.
inline Distribution calibrate(std::span<const double> dist, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ContractError("calibrate: temperature must be > 0");
  double top = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0)) throw ContractError("calibrate: negative or NaN probability");
    top = std::max(top, p);
  }
  if (top <= 0.0) throw ContractError("calibrate: all-zero input is not a distribution");

  // Computed relative to the largest entry: (p / top)^(1/T) lies in [0, 1].
  const double inv_t = 1.0 / temperature;
  const double log_top = std::log(top);
  Distribution out(dist.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] > 0.0) {
      out[i] = std::exp((std::log(dist[i]) - log_top) * inv_t);
      total += out[i];
    }
  }
  for (double& p : out) p /= total;
  return out;
}

}  // namespace pluralism
