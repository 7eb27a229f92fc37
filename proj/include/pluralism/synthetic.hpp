#pragma once

// Deterministic synthetic datasets with a tunable amount of subtheory
// overlap o in [0, 1].
//
// Priors. Subtheory s of school k has the simplex center
//   c_s = (1 - o) * vertex_k + o * (1/3, 1/3, 1/3)
// and each case draws
//   p = (1 - lam) * c_s + lam * Dirichlet(1 + 10 (1 - o) c_s),  lam = 0.1 + 0.4 o.
// At o = 0 every prior keeps at least 0.9 of its mass on its school.
//
// Embeddings. Segment e of a case of subtheory s is
//   0.6 * b_k + 0.6 (1 - o) * u_s + N(0, I)
// with b_k (school) and u_s (subtheory) standard normal directions, so
// schools stay apart while subtheories merge as o grows.
//
// Context. severity / duration / utility favor a school-specific value with
// probability 0.7 (1 - o); moral_intention and the principles favor a
// subtheory-specific value with probability 0.6 (1 - o). Otherwise values are
// uniform over the vocabulary.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "pluralism/case_model.hpp"
#include "pluralism/embedding.hpp"
#include "pluralism/error.hpp"
#include "pluralism/rng.hpp"
#include "pluralism/taxonomy.hpp"

namespace pluralism {

struct SynthVocabSizes {
  std::size_t severity = 4;
  std::size_t duration = 4;
  std::size_t utility = 4;
  std::size_t moral_intention = 15;
  std::size_t principles = 20;
  bool operator==(const SynthVocabSizes&) const = default;
};

struct SynthConfig {
  std::uint64_t seed = 42;
  std::size_t cases_per_subtheory = 30;
  double overlap = 0.3;
  EmbeddingDims embedding_dims = {16, 32, 32};
  SynthVocabSizes vocab_sizes;

  void validate() const {
    if (!(overlap >= 0.0 && overlap <= 1.0)) throw ContractError("synth config: overlap must be in [0, 1]");
    if (cases_per_subtheory == 0) throw ContractError("synth config: cases_per_subtheory must be positive");
    for (std::size_t d : embedding_dims) {
      if (d == 0) throw ContractError("synth config: embedding dims must be positive");
    }
    const auto& v = vocab_sizes;
    if (v.severity == 0 || v.duration == 0 || v.utility == 0 || v.moral_intention == 0 || v.principles == 0) {
      throw ContractError("synth config: vocabulary sizes must be positive");
    }
  }
  bool operator==(const SynthConfig&) const = default;
};

struct SynthDataset {
  std::vector<Case> cases;
  EmbeddingTable embeddings;
};

inline constexpr double kSynthSchoolScale = 0.6;
inline constexpr double kSynthSubtheoryScale = 0.6;
inline constexpr double kSynthSchoolAffinity = 0.7;
inline constexpr double kSynthSubtheoryAffinity = 0.6;

/// Simplex center of a subtheory's priors.
inline std::array<double, 3> synth_prior_center(Subtheory s, double overlap) {
  std::array<double, 3> c{};
  const std::size_t k = index_of(school_of(s));
  for (std::size_t j = 0; j < 3; ++j) c[j] = (1.0 - overlap) * (j == k ? 1.0 : 0.0) + overlap / 3.0;
  return c;
}

namespace detail {

inline std::string synth_token(const char* field, std::size_t i) { return std::string(field) + "_" + std::to_string(i); }

/// Preferred value with probability `affinity`, otherwise uniform.
inline std::size_t pick_value(Rng& rng, std::size_t preferred, std::size_t vocab, double affinity) {
  if (rng.uniform() < affinity) return preferred % vocab;
  return static_cast<std::size_t>(rng.below(vocab));
}

inline std::vector<std::string> pick_principles(Rng& rng, std::size_t preferred, std::size_t vocab, double affinity,
                                                const char* field) {
  std::vector<std::string> out;
  const std::size_t count = 1 + static_cast<std::size_t>(rng.below(2));
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t v = pick_value(rng, preferred + i, vocab, affinity);
    if (std::find(chosen.begin(), chosen.end(), v) == chosen.end()) chosen.push_back(v);
  }
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t v : chosen) out.push_back(synth_token(field, v));
  return out;
}

inline constexpr std::array<const char*, 5> kAgents = {"a nurse", "a manager", "a teacher", "a parent", "an engineer"};
inline constexpr std::array<const char*, 5> kOthers = {"a patient", "an employee", "a student", "a child", "the public"};
inline constexpr std::array<const char*, 5> kDomains = {"healthcare", "workplace", "education", "family", "technology"};

}  // namespace detail

inline SynthDataset generate(const SynthConfig& config) {
  config.validate();
  const double o = config.overlap;
  const auto& dims = config.embedding_dims;

  // Latent directions.
  Rng center_rng(derive_seed(config.seed, "centers"));
  std::array<std::array<std::vector<double>, 3>, kNumSchools> school_dir;
  std::array<std::array<std::vector<double>, 3>, kNumSubtheories> sub_dir;
  for (auto& school : school_dir) {
    for (std::size_t e = 0; e < 3; ++e) {
      school[e].resize(dims[e]);
      for (double& v : school[e]) v = center_rng.normal();
    }
  }
  for (auto& sub : sub_dir) {
    for (std::size_t e = 0; e < 3; ++e) {
      sub[e].resize(dims[e]);
      for (double& v : sub[e]) v = center_rng.normal();
    }
  }

  const double lam = 0.1 + 0.4 * o;
  const double school_aff = kSynthSchoolAffinity * (1.0 - o);
  const double sub_aff = kSynthSubtheoryAffinity * (1.0 - o);
  const auto& vs = config.vocab_sizes;
  const std::uint64_t case_seed = derive_seed(config.seed, "cases");

  SynthDataset out{{}, EmbeddingTable(dims)};
  out.cases.reserve(kNumSubtheories * config.cases_per_subtheory);
  std::size_t serial = 0;
  for (std::size_t s = 0; s < kNumSubtheories; ++s) {
    const Subtheory sub = subtheory_at(s);
    const NormativeSchool school = school_of(sub);
    const std::size_t k = index_of(school);
    const auto center = synth_prior_center(sub, o);
    std::vector<double> conc(3);
    for (std::size_t j = 0; j < 3; ++j) conc[j] = 1.0 + 10.0 * (1.0 - o) * center[j];

    for (std::size_t i = 0; i < config.cases_per_subtheory; ++i, ++serial) {
      Rng rng(derive_seed(case_seed, static_cast<std::uint64_t>(serial)));
      Case c;
      char id[32];
      std::snprintf(id, sizeof id, "syn-%02zu-%03zu", s, i);
      c.case_id = id;

      const auto noise = rng.dirichlet(conc);
      std::array<double, 3> p{};
      for (std::size_t j = 0; j < 3; ++j) p[j] = (1.0 - lam) * center[j] + lam * noise[j];
      c.prior = PriorSimplex::exact(p[0], p[1], p[2]);

      auto& x = c.context;
      x.severity = detail::synth_token("severity", detail::pick_value(rng, k, vs.severity, school_aff));
      x.duration = detail::synth_token("duration", detail::pick_value(rng, k, vs.duration, school_aff));
      x.utility = detail::synth_token("utility", detail::pick_value(rng, k, vs.utility, school_aff));
      x.moral_intention = detail::synth_token("intention", detail::pick_value(rng, s, vs.moral_intention, sub_aff));
      x.principles_upheld = detail::pick_principles(rng, s, vs.principles, sub_aff, "principle");
      x.principles_violated = detail::pick_principles(rng, s + kNumSubtheories / 2, vs.principles, sub_aff, "principle");
      const std::size_t a = static_cast<std::size_t>(rng.below(detail::kAgents.size()));
      x.active_agent = detail::kAgents[a];
      x.passive_agent = detail::kOthers[a];
      x.agent_relationship = "professional";
      x.domain = detail::kDomains[a];
      x.action = "weighs a decision";
      x.ethical_issues = {"moral dilemma"};
      x.consequence = "uncertain outcome";

      c.selftext = std::string(detail::kAgents[a]) + " faces a dilemma in " + detail::kDomains[a] + ". " +
                   std::string(kSubtheoryDescriptions[s]) + " Case " + std::to_string(i) + ".";
      c.summary = std::string(kSubtheoryNames[s]) + " dilemma involving " + detail::kOthers[a] + ".";
      c.moral_decision = "act according to " + std::string(kSchoolNames[k]);
      c.school_label = school;
      c.subtheory_label = sub;

      EmbeddingTable::Segments seg;
      for (std::size_t e = 0; e < 3; ++e) {
        seg[e].resize(dims[e]);
        for (std::size_t j = 0; j < dims[e]; ++j) {
          const double v = kSynthSchoolScale * school_dir[k][e][j] +
                           kSynthSubtheoryScale * (1.0 - o) * sub_dir[s][e][j] + rng.normal();
          seg[e][j] = static_cast<float>(v);
        }
      }
      out.embeddings.insert(c.case_id, std::move(seg));
      out.cases.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace pluralism
