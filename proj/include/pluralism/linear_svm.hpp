#pragma once

// One-vs-rest linear max-margin classifier trained with Pegasos: stochastic
// subgradient steps of size 1/(lambda t) on
//   lambda/2 |(w, b)|^2 + mean_i max(0, 1 - y_i (w.x_i + b)),
// projection onto the ball of radius 1/sqrt(lambda), and averaging of the
// iterates over the second half of training. Probabilities are the softmax
// of the per-class margins.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "pluralism/error.hpp"
#include "pluralism/forest.hpp"
#include "pluralism/matrix.hpp"
#include "pluralism/probability.hpp"
#include "pluralism/rng.hpp"

namespace pluralism {

struct LinearParams {
  double lambda = 1e-3;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(lambda > 0.0)) throw ContractError("linear params: lambda must be positive");
    if (epochs == 0) throw ContractError("linear params: epochs must be positive");
  }
  bool operator==(const LinearParams&) const = default;
};

struct LinearModel {
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::vector<std::vector<double>> weights;  // per class, length n_features
  std::vector<double> bias;                  // per class
  bool operator==(const LinearModel&) const = default;
};

inline double linear_margin(std::span<const double> w, double b, std::span<const double> x) {
  return std::inner_product(w.begin(), w.end(), x.begin(), b);
}

/// Regularized hinge objective of one binary problem (labels +1 / -1).
inline double hinge_objective(std::span<const double> w, double b, const Matrix& x, std::span<const int> y_pm,
                              double lambda) {
  double norm2 = b * b;
  for (double v : w) norm2 += v * v;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    loss += std::max(0.0, 1.0 - y_pm[i] * linear_margin(w, b, x.row(i)));
  }
  return 0.5 * lambda * norm2 + loss / static_cast<double>(x.rows());
}

struct BinaryHyperplane {
  std::vector<double> w;
  double b = 0.0;
};

inline BinaryHyperplane pegasos_binary(const Matrix& x, std::span<const int> y_pm, double lambda, std::size_t epochs,
                                       std::uint64_t seed) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  std::vector<double> w(d, 0.0);
  double b = 0.0;
  std::vector<double> avg_w(d, 0.0);
  double avg_b = 0.0;
  std::size_t averaged = 0;

  const std::size_t total_steps = epochs * n;
  const std::size_t average_from = total_steps / 2 + 1;
  const double radius = 1.0 / std::sqrt(lambda);
  std::vector<std::size_t> order(n);
  std::size_t t = 0;
  for (std::size_t e = 0; e < epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(e)));
    rng.shuffle(order);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const auto row = x.row(i);
      const double yi = static_cast<double>(y_pm[i]);
      const bool violated = yi * linear_margin(w, b, row) < 1.0;
      const double shrink = 1.0 - eta * lambda;
      for (double& v : w) v *= shrink;
      b *= shrink;
      if (violated) {
        for (std::size_t j = 0; j < d; ++j) w[j] += eta * yi * row[j];
        b += eta * yi;
      }
      double norm2 = b * b;
      for (double v : w) norm2 += v * v;
      if (norm2 > radius * radius) {
        const double s = radius / std::sqrt(norm2);
        for (double& v : w) v *= s;
        b *= s;
      }
      if (t >= average_from) {
        for (std::size_t j = 0; j < d; ++j) avg_w[j] += w[j];
        avg_b += b;
        ++averaged;
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(averaged);
  for (double& v : avg_w) v *= inv;
  return {std::move(avg_w), avg_b * inv};
}

inline LinearModel linear_fit(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                              const LinearParams& params) {
  params.validate();
  check_training_inputs(x, y, n_classes);
  LinearModel model;
  model.n_features = x.cols();
  model.n_classes = n_classes;
  std::vector<int> y_pm(y.size());
  for (std::size_t k = 0; k < n_classes; ++k) {
    for (std::size_t i = 0; i < y.size(); ++i) y_pm[i] = static_cast<std::size_t>(y[i]) == k ? 1 : -1;
    auto plane = pegasos_binary(x, y_pm, params.lambda, params.epochs, derive_seed(params.seed, static_cast<std::uint64_t>(k)));
    model.weights.push_back(std::move(plane.w));
    model.bias.push_back(plane.b);
  }
  return model;
}

inline std::vector<double> linear_margins(const LinearModel& model, std::span<const double> x) {
  check_width(model.n_features, x.size(), "linear_predict");
  std::vector<double> margins(model.n_classes);
  for (std::size_t k = 0; k < model.n_classes; ++k) margins[k] = linear_margin(model.weights[k], model.bias[k], x);
  return margins;
}

inline Distribution linear_predict(const LinearModel& model, std::span<const double> x) {
  return softmax(linear_margins(model, x));
}

}  // namespace pluralism
