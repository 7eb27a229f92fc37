#pragma once

// The three normative schools and the fifteen subtheory labels.
//
// Canonical orders used by every vector layout in the library:
//   schools     (alpha, beta, gamma) = (Consequentialism, VirtueEthics, Deontology)
//   subtheories school-major, indices 0..14, five per school.

#include <array>
#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace pluralism {

enum class NormativeSchool : int { Consequentialism = 0, VirtueEthics = 1, Deontology = 2 };

inline constexpr std::size_t kNumSchools = 3;
inline constexpr std::size_t kNumSubtheories = 15;
inline constexpr std::size_t kSubtheoriesPerSchool = 5;

enum class Subtheory : int {
  ActUtilitarianism = 0,
  RuleUtilitarianism,
  PreferenceUtilitarianism,
  NegativeUtilitarianism,
  EthicalEgoism,
  AristotelianVirtueEthics,
  StoicVirtueEthics,
  ConfucianVirtueEthics,
  ThomisticVirtueEthics,
  EthicsOfCare,
  KantianDeontology,
  RossPrimaFacieDuties,
  DivineCommandTheory,
  Contractualism,
  RightsBasedDeontology,
};

inline constexpr std::array<NormativeSchool, kNumSchools> kAllSchools = {
    NormativeSchool::Consequentialism, NormativeSchool::VirtueEthics,
    NormativeSchool::Deontology};

constexpr std::size_t index_of(NormativeSchool s) noexcept { return static_cast<std::size_t>(s); }
constexpr std::size_t index_of(Subtheory s) noexcept { return static_cast<std::size_t>(s); }

constexpr NormativeSchool school_at(std::size_t i) noexcept {
  return static_cast<NormativeSchool>(static_cast<int>(i));
}
constexpr Subtheory subtheory_at(std::size_t i) noexcept {
  return static_cast<Subtheory>(static_cast<int>(i));
}

constexpr NormativeSchool school_of(Subtheory sub) noexcept {
  return school_at(index_of(sub) / kSubtheoriesPerSchool);
}

inline constexpr std::array<std::string_view, kNumSchools> kSchoolNames = {
    "Consequentialism", "Virtue Ethics", "Deontology"};

inline constexpr std::array<std::string_view, kNumSubtheories> kSubtheoryNames = {
    "Act Utilitarianism",
    "Rule Utilitarianism",
    "Preference Utilitarianism",
    "Negative Utilitarianism",
    "Ethical Egoism",
    "Aristotelian Virtue Ethics",
    "Stoic Virtue Ethics",
    "Confucian Virtue Ethics",
    "Thomistic Virtue Ethics",
    "Ethics of Care",
    "Kantian Deontology",
    "Ross's Prima Facie Duties",
    "Divine Command Theory",
    "Contractualism",
    "Rights-Based Deontology",
};

/// One-line descriptions, used when rendering annotation prompts.
inline constexpr std::array<std::string_view, kNumSubtheories> kSubtheoryDescriptions = {
    "Evaluates action based on maximization of utility.",
    "Judges actions according to rules that produce the greatest good.",
    "Satisfies preferences of individuals.",
    "Prioritizes minimal suffering over maximal happiness.",
    "Advances self-interest of the decision-maker.",
    "Prioritizes virtuous character and practical wisdom.",
    "Emphasizes rational self-control and moral discipline.",
    "Centers morality around social harmony and respect within society.",
    "Integrates Aristotelian virtues with theological principles.",
    "Prioritizes empathy, compassion, and responsiveness to others' needs.",
    "Emphasizes universal moral duties.",
    "Proposes multiple competing duties must be balanced contextually.",
    "Adherence to commands that originate from divine authority.",
    "Justifies actions based on mutually acceptable principles.",
    "Prioritizes protection of individual rights.",
};

constexpr std::string_view name_of(NormativeSchool s) noexcept { return kSchoolNames[index_of(s)]; }
constexpr std::string_view name_of(Subtheory s) noexcept { return kSubtheoryNames[index_of(s)]; }

namespace detail {

// Lowercase ASCII alphanumerics only; apostrophe variants, spaces, dashes and
// any non-ASCII bytes drop out, so "Ross’s Prima Facie Duties" and
// "ross_s_prima_facie_duties" compare equal.
inline std::string label_key(std::string_view text) {
  std::string key;
  key.reserve(text.size());
  for (unsigned char c : text) {
    if (c < 0x80 && std::isalnum(c)) key.push_back(static_cast<char>(std::tolower(c)));
  }
  // Possessive "s" after an apostrophe is dropped so "Ross" and "Ross's" agree.
  if (key.starts_with("rosss")) key.erase(4, 1);
  return key;
}

}  // namespace detail

inline std::optional<NormativeSchool> parse_school(std::string_view text) {
  const std::string key = detail::label_key(text);
  for (std::size_t i = 0; i < kNumSchools; ++i) {
    if (key == detail::label_key(kSchoolNames[i])) return school_at(i);
  }
  if (key == "virtue") return NormativeSchool::VirtueEthics;
  if (key == "deontological") return NormativeSchool::Deontology;
  if (key == "consequentialist") return NormativeSchool::Consequentialism;
  return std::nullopt;
}

inline std::optional<Subtheory> parse_subtheory(std::string_view text) {
  const std::string key = detail::label_key(text);
  for (std::size_t i = 0; i < kNumSubtheories; ++i) {
    if (key == detail::label_key(kSubtheoryNames[i])) return subtheory_at(i);
  }
  if (key == "careethics") return Subtheory::EthicsOfCare;
  if (key == "kantianethics") return Subtheory::KantianDeontology;
  return std::nullopt;
}

}  // namespace pluralism
