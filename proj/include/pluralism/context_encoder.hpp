#pragma once

// One-hot / multi-hot encoding of the categorical contextual fields.
// Field order: severity, duration, utility, moral_intention,
// principles_upheld, principles_violated. Values unseen at fit time encode
// to an all-zero block.

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "pluralism/case_model.hpp"
#include "pluralism/error.hpp"

namespace pluralism {

inline constexpr std::array<std::string_view, 6> kContextFields = {
    "severity", "duration", "utility", "moral_intention", "principles_upheld", "principles_violated"};

class ContextEncoder {
 public:
  using Vocabulary = std::vector<std::string>;

  ContextEncoder() = default;
  /// Vocabularies are sorted and deduplicated on construction.
  explicit ContextEncoder(std::array<Vocabulary, 6> vocabularies) : vocab_(std::move(vocabularies)) {
    for (auto& v : vocab_) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      v.erase(std::remove(v.begin(), v.end(), std::string()), v.end());
    }
  }

  const std::array<Vocabulary, 6>& vocabularies() const noexcept { return vocab_; }

  std::size_t width() const noexcept {
    std::size_t w = 0;
    for (const auto& v : vocab_) w += v.size();
    return w;
  }

  std::vector<double> encode(const ContextualFeatures& ctx) const {
    std::vector<double> out(width(), 0.0);
    std::size_t offset = 0;
    auto mark = [&](std::size_t field, std::string_view value) {
      const auto& v = vocab_[field];
      const auto it = std::lower_bound(v.begin(), v.end(), value);
      if (it != v.end() && *it == value) out[offset + static_cast<std::size_t>(it - v.begin())] = 1.0;
    };
    const std::array<const std::string*, 4> single = {&ctx.severity, &ctx.duration, &ctx.utility,
                                                      &ctx.moral_intention};
    for (std::size_t f = 0; f < 4; ++f) {
      mark(f, *single[f]);
      offset += vocab_[f].size();
    }
    for (const std::string& p : ctx.principles_upheld) mark(4, p);
    offset += vocab_[4].size();
    for (const std::string& p : ctx.principles_violated) mark(5, p);
    return out;
  }

  bool operator==(const ContextEncoder&) const = default;

 private:
  std::array<Vocabulary, 6> vocab_;
};

inline ContextEncoder fit_context_encoder(const std::vector<Case>& training) {
  if (training.empty()) throw ContractError("fit_context_encoder: empty training set");
  std::array<ContextEncoder::Vocabulary, 6> vocab;
  for (const Case& c : training) {
    const ContextualFeatures& x = c.context;
    vocab[0].push_back(x.severity);
    vocab[1].push_back(x.duration);
    vocab[2].push_back(x.utility);
    vocab[3].push_back(x.moral_intention);
    vocab[4].insert(vocab[4].end(), x.principles_upheld.begin(), x.principles_upheld.end());
    vocab[5].insert(vocab[5].end(), x.principles_violated.begin(), x.principles_violated.end());
  }
  return ContextEncoder(std::move(vocab));
}

inline std::vector<double> encode_context(const ContextEncoder& encoder, const ContextualFeatures& ctx) {
  return encoder.encode(ctx);
}

}  // namespace pluralism
