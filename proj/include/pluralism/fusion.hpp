#pragma once

// Unified feature space: normative-prior block (N_P), semantic supervector
// (SV) and context block (C), always concatenated in that order. Also the
// per-column standardizer used ahead of the learners.

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pluralism/embedding.hpp"
#include "pluralism/error.hpp"
#include "pluralism/matrix.hpp"

namespace pluralism {

enum class FeatureBlock { NormativePrior = 0, Supervector = 1, Context = 2 };

inline constexpr std::array<std::string_view, 3> kBlockNames = {"N_P", "SV", "C"};

struct FusionConfig {
  std::array<bool, 3> blocks{true, true, true};       // N_P, SV, C
  std::array<bool, 3> embeddings{true, true, true};   // E1, E2, E3

  bool uses(FeatureBlock b) const noexcept { return blocks[static_cast<std::size_t>(b)]; }

  void validate() const {
    if (!blocks[0] && !blocks[1] && !blocks[2]) throw ContractError("fusion config selects no blocks");
    if (uses(FeatureBlock::Supervector) && !embeddings[0] && !embeddings[1] && !embeddings[2]) {
      throw ContractError("fusion config selects SV with no active embeddings");
    }
  }

  bool operator==(const FusionConfig&) const = default;
};

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;
  bool operator==(const Segment&) const = default;
};

using FusionLayout = std::vector<Segment>;

inline std::size_t layout_width(const FusionLayout& layout) {
  return layout.empty() ? 0 : layout.back().offset + layout.back().length;
}

struct FusedVector {
  std::vector<double> values;
  FusionLayout layout;
};

struct FusionInputs {
  std::optional<std::vector<double>> prior;
  std::optional<EmbeddingTable::Segments> embeddings;
  std::optional<std::vector<double>> context;
};

inline FusedVector assemble(const FusionConfig& config, const FusionInputs& in) {
  config.validate();
  FusedVector out;
  auto push = [&out](FeatureBlock b, auto&& append) {
    Segment seg{std::string(kBlockNames[static_cast<std::size_t>(b)]), out.values.size(), 0};
    append();
    seg.length = out.values.size() - seg.offset;
    out.layout.push_back(std::move(seg));
  };
  if (config.uses(FeatureBlock::NormativePrior)) {
    if (!in.prior) throw ContractError("fusion: block N_P selected but no prior features supplied");
    push(FeatureBlock::NormativePrior, [&] { out.values.insert(out.values.end(), in.prior->begin(), in.prior->end()); });
  }
  if (config.uses(FeatureBlock::Supervector)) {
    if (!in.embeddings) throw ContractError("fusion: block SV selected but no embeddings supplied");
    push(FeatureBlock::Supervector, [&] {
      for (std::size_t k = 0; k < 3; ++k) {
        if (config.embeddings[k]) {
          const auto& e = (*in.embeddings)[k];
          out.values.insert(out.values.end(), e.begin(), e.end());
        }
      }
    });
  }
  if (config.uses(FeatureBlock::Context)) {
    if (!in.context) throw ContractError("fusion: block C selected but no context encoding supplied");
    push(FeatureBlock::Context, [&] { out.values.insert(out.values.end(), in.context->begin(), in.context->end()); });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Standardization

/// Per-column (x - mean) / sd with population sd; columns whose sd is below
/// 1e-12 pass through unchanged.
class Scaler {
 public:
  Scaler() = default;
  Scaler(std::vector<double> mean, std::vector<double> scale) : mean_(std::move(mean)), scale_(std::move(scale)) {}

  std::size_t width() const noexcept { return mean_.size(); }
  const std::vector<double>& mean() const noexcept { return mean_; }
  const std::vector<double>& scale() const noexcept { return scale_; }

  void apply_in_place(std::span<double> row) const {
    if (row.size() != mean_.size()) {
      throw ContractError("scaler: width " + std::to_string(row.size()) + " != fitted width " +
                          std::to_string(mean_.size()));
    }
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean_[j]) / scale_[j];
  }

  std::vector<double> apply(std::span<const double> row) const {
    std::vector<double> out(row.begin(), row.end());
    apply_in_place(out);
    return out;
  }

  Matrix apply(const Matrix& x) const {
    Matrix out = x;
    for (std::size_t i = 0; i < out.rows(); ++i) apply_in_place(out.row(i));
    return out;
  }

  bool operator==(const Scaler&) const = default;

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
};

inline Scaler standardize_fit(const Matrix& train) {
  if (train.empty()) throw ContractError("standardize_fit: empty training matrix");
  const std::size_t n = train.rows();
  const std::size_t d = train.cols();
  std::vector<double> mean(d, 0.0);
  std::vector<double> scale(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += train(i, j);
    const double m = s / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dv = train(i, j) - m;
      ss += dv * dv;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (sd >= 1e-12) {
      mean[j] = m;
      scale[j] = sd;
    }
  }
  return Scaler(std::move(mean), std::move(scale));
}

inline Matrix standardize_apply(const Scaler& scaler, const Matrix& x) { return scaler.apply(x); }

}  // namespace pluralism
