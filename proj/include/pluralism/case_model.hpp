#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pluralism/error.hpp"
#include "pluralism/taxonomy.hpp"

namespace pluralism {

/// Drift from the simplex that is repaired by renormalization; larger drift
/// is rejected.
inline constexpr double kPriorRenormTolerance = 0.02;
inline constexpr double kSimplexTolerance = 1e-9;

/// A point (alpha, beta, gamma) on the normative simplex.
class PriorSimplex {
 public:
  /// Validates raw scores: each must be finite and non-negative, and the sum
  /// s must satisfy |s - 1| <= tolerance. Scores are divided by s when s is
  /// not already 1 to within 1e-12.
  static PriorSimplex from_scores(double alpha, double beta, double gamma,
                                  double tolerance = kPriorRenormTolerance) {
    for (double v : {alpha, beta, gamma}) {
      if (!std::isfinite(v) || v < 0.0) {
        throw DataError("prior component negative or not finite");
      }
    }
    const double sum = alpha + beta + gamma;
    if (std::abs(sum - 1.0) > tolerance) {
      throw DataError("prior out of tolerance (sum " + std::to_string(sum) + ")");
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      alpha /= sum;
      beta /= sum;
      gamma /= sum;
    }
    return PriorSimplex({alpha, beta, gamma});
  }

  /// Strict constructor for values that are already on the simplex.
  static PriorSimplex exact(double alpha, double beta, double gamma) {
    return from_scores(alpha, beta, gamma, kSimplexTolerance);
  }

  static PriorSimplex vertex(NormativeSchool school) {
    std::array<double, 3> c{0.0, 0.0, 0.0};
    c[index_of(school)] = 1.0;
    return PriorSimplex(c);
  }

  static PriorSimplex uniform() { return PriorSimplex({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}); }

  double alpha() const noexcept { return c_[0]; }
  double beta() const noexcept { return c_[1]; }
  double gamma() const noexcept { return c_[2]; }
  double operator[](std::size_t i) const noexcept { return c_[i]; }
  double operator[](NormativeSchool s) const noexcept { return c_[index_of(s)]; }
  const std::array<double, 3>& components() const noexcept { return c_; }

  bool operator==(const PriorSimplex&) const = default;

 private:
  explicit PriorSimplex(std::array<double, 3> c) : c_(c) {}
  std::array<double, 3> c_;
};

struct ContextualFeatures {
  std::string active_agent;
  std::string passive_agent;
  std::string agent_relationship;
  std::string action;
  std::string domain;
  std::vector<std::string> ethical_issues;
  std::string consequence;
  std::string severity;
  std::string utility;
  std::string duration;
  std::string moral_intention;
  std::vector<std::string> principles_upheld;
  std::vector<std::string> principles_violated;

  bool operator==(const ContextualFeatures&) const = default;
};

struct Case {
  std::string case_id;
  std::string selftext;
  std::string summary;
  ContextualFeatures context;
  std::optional<PriorSimplex> prior;
  std::string moral_decision;
  std::optional<NormativeSchool> school_label;
  std::optional<Subtheory> subtheory_label;

  bool operator==(const Case&) const = default;
};

/// Per-subtheory counts, missing-field counts, and the balance flag.
struct DatasetReport {
  std::size_t n_cases = 0;
  std::array<std::size_t, kNumSubtheories> subtheory_counts{};
  std::size_t unlabeled = 0;
  std::vector<std::pair<std::string, std::size_t>> missing_fields;
  bool balanced = true;
};

inline DatasetReport validate_dataset(const std::vector<Case>& cases) {
  DatasetReport report;
  report.n_cases = cases.size();

  std::vector<std::pair<std::string, std::size_t>> missing = {
      {"selftext", 0},        {"summary", 0},          {"active_agent", 0},
      {"passive_agent", 0},   {"agent_relationship", 0}, {"action", 0},
      {"domain", 0},          {"ethical_issues", 0},   {"consequence", 0},
      {"severity", 0},        {"utility", 0},          {"duration", 0},
      {"moral_intention", 0}, {"principles_upheld", 0}, {"principles_violated", 0},
      {"moral_decision", 0},  {"prior", 0},            {"normative_school", 0},
      {"ethics_subtheory", 0}};
  auto bump = [&missing](std::size_t slot, bool is_missing) {
    if (is_missing) ++missing[slot].second;
  };

  for (const Case& c : cases) {
    const ContextualFeatures& x = c.context;
    bump(0, c.selftext.empty());
    bump(1, c.summary.empty());
    bump(2, x.active_agent.empty());
    bump(3, x.passive_agent.empty());
    bump(4, x.agent_relationship.empty());
    bump(5, x.action.empty());
    bump(6, x.domain.empty());
    bump(7, x.ethical_issues.empty());
    bump(8, x.consequence.empty());
    bump(9, x.severity.empty());
    bump(10, x.utility.empty());
    bump(11, x.duration.empty());
    bump(12, x.moral_intention.empty());
    bump(13, x.principles_upheld.empty());
    bump(14, x.principles_violated.empty());
    bump(15, c.moral_decision.empty());
    bump(16, !c.prior.has_value());
    bump(17, !c.school_label.has_value());
    bump(18, !c.subtheory_label.has_value());
    if (c.subtheory_label) {
      ++report.subtheory_counts[index_of(*c.subtheory_label)];
    } else {
      ++report.unlabeled;
    }
  }
  report.missing_fields = std::move(missing);
  for (std::size_t count : report.subtheory_counts) {
    if (count != report.subtheory_counts[0]) report.balanced = false;
  }
  return report;
}

}  // namespace pluralism
