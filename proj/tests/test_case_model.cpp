#include <catch_amalgamated.hpp>

#include <sstream>

#include "pluralism/case_io.hpp"
#include "pluralism/case_model.hpp"
#include "pluralism/csv.hpp"
#include "pluralism/taxonomy.hpp"
#include "support.hpp"

using namespace pluralism;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

TEST_CASE("taxonomy groups fifteen subtheories five per school", "[taxonomy]") {
  std::array<int, kNumSchools> per_school{};
  for (std::size_t i = 0; i < kNumSubtheories; ++i) ++per_school[index_of(school_of(subtheory_at(i)))];
  CHECK(per_school == std::array<int, 3>{5, 5, 5});
  // school-major: indices 0-4, 5-9, 10-14
  for (std::size_t i = 0; i < kNumSubtheories; ++i) CHECK(index_of(school_of(subtheory_at(i))) == i / 5);
}

TEST_CASE("school_of matches the published table rows", "[taxonomy]") {
  CHECK(school_of(Subtheory::ActUtilitarianism) == NormativeSchool::Consequentialism);
  CHECK(school_of(Subtheory::KantianDeontology) == NormativeSchool::Deontology);
  CHECK(school_of(Subtheory::EthicsOfCare) == NormativeSchool::VirtueEthics);
  CHECK(school_of(Subtheory::EthicalEgoism) == NormativeSchool::Consequentialism);
  CHECK(school_of(Subtheory::RightsBasedDeontology) == NormativeSchool::Deontology);
}

TEST_CASE("label parsing is tolerant of case, punctuation and apostrophes", "[taxonomy]") {
  CHECK(parse_subtheory("Ross's Prima Facie Duties") == Subtheory::RossPrimaFacieDuties);
  CHECK(parse_subtheory("ross_prima_facie_duties") == Subtheory::RossPrimaFacieDuties);
  CHECK(parse_subtheory("Ross\xE2\x80\x99s Prima Facie Duties") == Subtheory::RossPrimaFacieDuties);
  CHECK(parse_subtheory("rights-based deontology") == Subtheory::RightsBasedDeontology);
  CHECK(parse_school("virtue ethics") == NormativeSchool::VirtueEthics);
  CHECK_FALSE(parse_subtheory("Nihilism").has_value());
  for (std::size_t i = 0; i < kNumSubtheories; ++i) CHECK(parse_subtheory(kSubtheoryNames[i]) == subtheory_at(i));
}

TEST_CASE("PriorSimplex renormalizes small drift and rejects large drift", "[prior]") {
  const auto p = PriorSimplex::from_scores(0.50, 0.30, 0.21);
  const long double s = 0.50L + 0.30L + 0.21L;
  CHECK_THAT(p.alpha(), WithinAbs(static_cast<double>(0.50L / s), 1e-9));
  CHECK_THAT(p.beta(), WithinAbs(static_cast<double>(0.30L / s), 1e-9));
  CHECK_THAT(p.gamma(), WithinAbs(static_cast<double>(0.21L / s), 1e-9));
  CHECK_THAT(p.alpha() + p.beta() + p.gamma(), WithinAbs(1.0, 1e-9));

  CHECK_THROWS_WITH(PriorSimplex::from_scores(0.6, 0.6, 0.6), ContainsSubstring("prior out of tolerance"));
  CHECK_THROWS_AS(PriorSimplex::from_scores(-0.1, 0.6, 0.5), DataError);
  CHECK_THROWS_AS(PriorSimplex::from_scores(std::nan(""), 0.5, 0.5), DataError);
  // boundary: 0.02 drift is still accepted
  CHECK_NOTHROW(PriorSimplex::from_scores(0.5, 0.25, 0.25 - 0.0199));
}

TEST_CASE("PriorSimplex invariants hold for random valid scores", "[prior][property]") {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const double drift = (rng.uniform() * 2.0 - 1.0) * 0.019;
    const auto base = testsupport::random_simplex(rng);
    const auto p = PriorSimplex::from_scores(base.alpha() * (1 + drift), base.beta() * (1 + drift),
                                             base.gamma() * (1 + drift));
    for (double c : p.components()) {
      REQUIRE(c >= 0.0);
      REQUIRE(c <= 1.0);
    }
    REQUIRE(std::abs(p.alpha() + p.beta() + p.gamma() - 1.0) <= 1e-9);
  }
}

TEST_CASE("load_cases reads the three-row CSV fixture", "[io]") {
  const auto cases = load_cases(testsupport::fixture("cases_3.csv"));
  REQUIRE(cases.size() == 3);
  const Case& c = cases[0];
  CHECK(c.case_id == "c001");
  CHECK(c.selftext == "A nurse hides a diagnosis, \"for now\", to calm a patient.");
  CHECK(c.context.ethical_issues == std::vector<std::string>{"honesty", "autonomy"});
  CHECK(c.context.principles_upheld == std::vector<std::string>{"care", "compassion"});
  CHECK(c.context.severity == "high");
  CHECK(c.context.utility == "morally gray");
  REQUIRE(c.prior.has_value());
  CHECK(c.prior->beta() == 0.5);
  CHECK(c.school_label == NormativeSchool::VirtueEthics);
  CHECK(c.subtheory_label == Subtheory::EthicsOfCare);
  CHECK(cases[1].subtheory_label == Subtheory::KantianDeontology);
  CHECK(cases[2].subtheory_label == Subtheory::ActUtilitarianism);
}

TEST_CASE("CSV and JSONL fixtures describe the same cases", "[io]") {
  CHECK(load_cases(testsupport::fixture("cases_3.csv")) == load_cases(testsupport::fixture("cases_3.jsonl")));
}

TEST_CASE("load_cases repairs a prior summing to 1.01", "[io]") {
  const auto cases = load_cases(testsupport::fixture("prior_renorm.csv"));
  REQUIRE(cases.size() == 1);
  const auto& p = *cases[0].prior;
  CHECK_THAT(p.alpha(), WithinAbs(static_cast<double>(0.50L / 1.01L), 1e-9));
  CHECK_THAT(p.beta(), WithinAbs(static_cast<double>(0.30L / 1.01L), 1e-9));
  CHECK_THAT(p.gamma(), WithinAbs(static_cast<double>(0.21L / 1.01L), 1e-9));
}

TEST_CASE("load_cases error paths", "[io]") {
  CHECK_THROWS_WITH(load_cases(testsupport::fixture("prior_out_of_tolerance.csv")),
                    ContainsSubstring("prior out of tolerance"));
  CHECK_THROWS_WITH(load_cases(testsupport::fixture("duplicate_id.csv")), ContainsSubstring("duplicate case_id"));
  CHECK_THROWS_WITH(load_cases(testsupport::fixture("label_mismatch.csv")),
                    ContainsSubstring("does not belong to the labeled school"));
  CHECK_THROWS_AS(load_cases(testsupport::fixture("missing.csv")), IoError);
  CHECK_THROWS_AS(load_cases("cases.txt"), ContractError);

  std::istringstream bad_header("case_id,text\nx,y\n");
  CHECK_THROWS_WITH(read_cases_csv(bad_header), ContainsSubstring("header"));

  std::istringstream short_row(std::string("case_id,selftext,summary,active_agent,passive_agent,agent_relationship,"
                                           "action,domain,ethical_issues,consequence,severity,utility,duration,"
                                           "moral_intention,principles_upheld,principles_violated,moral_decision,"
                                           "alpha,beta,gamma,normative_school,ethics_subtheory\n") +
                               "a,b,c\n");
  CHECK_THROWS_WITH(read_cases_csv(short_row), ContainsSubstring("row 1"));

  std::istringstream bad_number(R"({"case_id":"a","prior":{"alpha":"x","beta":0.5,"gamma":0.5}})");
  CHECK_THROWS_WITH(read_cases_jsonl(bad_number), ContainsSubstring("field 'alpha'"));

  std::istringstream bad_label(R"({"case_id":"a","ethics_subtheory":"Nihilism"})");
  CHECK_THROWS_WITH(read_cases_jsonl(bad_label), ContainsSubstring("ethics_subtheory"));

  std::istringstream not_json("{oops\n");
  CHECK_THROWS_AS(read_cases_jsonl(not_json), DataError);
}

namespace {

std::string random_word(Rng& rng) {
  static const std::array<const char*, 8> words = {"care", "duty", "harm", "trust", "fair", "rule", "gain", "loss"};
  return words[rng.below(words.size())];
}

std::string random_text(Rng& rng) {
  std::string s = random_word(rng);
  const auto n = rng.below(4);
  for (std::uint64_t i = 0; i < n; ++i) {
    static const std::array<const char*, 5> seps = {" ", ", ", "\"", "\n", " - "};
    s += seps[rng.below(seps.size())];
    s += random_word(rng);
  }
  return s;
}

std::vector<std::string> random_list(Rng& rng) {
  std::vector<std::string> out;
  const auto n = rng.below(3);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(random_word(rng));
  return out;
}

Case random_case(Rng& rng, std::size_t i) {
  Case c;
  c.case_id = "case-" + std::to_string(i);
  c.selftext = random_text(rng);
  c.summary = rng.uniform() < 0.1 ? "" : random_text(rng);
  auto& x = c.context;
  x.active_agent = random_text(rng);
  x.passive_agent = random_word(rng);
  x.agent_relationship = random_word(rng);
  x.action = random_text(rng);
  x.domain = random_word(rng);
  x.ethical_issues = random_list(rng);
  x.consequence = random_text(rng);
  x.severity = random_word(rng);
  x.utility = random_word(rng);
  x.duration = random_word(rng);
  x.moral_intention = random_word(rng);
  x.principles_upheld = random_list(rng);
  x.principles_violated = random_list(rng);
  c.moral_decision = random_word(rng);
  if (rng.uniform() < 0.8) c.prior = testsupport::random_simplex(rng);
  if (rng.uniform() < 0.9) {
    c.subtheory_label = subtheory_at(rng.below(kNumSubtheories));
    if (rng.uniform() < 0.7) c.school_label = school_of(*c.subtheory_label);
  }
  return c;
}

}  // namespace

TEST_CASE("case files round-trip through both formats", "[io][property]") {
  Rng rng(5);
  std::vector<Case> cases;
  for (std::size_t i = 0; i < 200; ++i) cases.push_back(random_case(rng, i));

  std::stringstream csv_buf;
  write_cases_csv(csv_buf, cases);
  CHECK(read_cases_csv(csv_buf) == cases);

  std::stringstream jsonl_buf;
  write_cases_jsonl(jsonl_buf, cases);
  CHECK(read_cases_jsonl(jsonl_buf) == cases);

  const auto dir = testsupport::scratch_dir("case_roundtrip");
  save_cases(dir / "c.csv", cases);
  save_cases(dir / "c.jsonl", cases);
  CHECK(load_cases(dir / "c.csv") == cases);
  CHECK(load_cases(dir / "c.jsonl") == cases);
}

TEST_CASE("CSV reader handles RFC-4180 quoting", "[csv]") {
  std::istringstream in("a,\"b,\"\"c\"\"\",\"multi\r\nline\"\r\n,\n");
  const auto t = csv::parse(in);
  REQUIRE(t.records.size() == 2);
  CHECK(t.records[0] == csv::Record{"a", "b,\"c\"", "multi\r\nline"});
  CHECK(t.records[1] == csv::Record{"", ""});
  CHECK(t.start_lines == std::vector<std::size_t>{1, 3});
}

TEST_CASE("validate_dataset counts, balance and missing fields", "[report]") {
  SECTION("balanced 450") {
    std::vector<Case> cases;
    for (std::size_t s = 0; s < kNumSubtheories; ++s) {
      for (int i = 0; i < 30; ++i) {
        Case c;
        c.case_id = std::to_string(s) + "-" + std::to_string(i);
        c.subtheory_label = subtheory_at(s);
        cases.push_back(c);
      }
    }
    const auto r = validate_dataset(cases);
    CHECK(r.n_cases == 450);
    CHECK(r.balanced);
    for (std::size_t n : r.subtheory_counts) CHECK(n == 30);
  }
  SECTION("empty is vacuously balanced") {
    const auto r = validate_dataset({});
    CHECK(r.balanced);
    CHECK(r.n_cases == 0);
    for (std::size_t n : r.subtheory_counts) CHECK(n == 0);
  }
  SECTION("2 + 1 is unbalanced") {
    std::vector<Case> cases(3);
    cases[0].subtheory_label = cases[1].subtheory_label = Subtheory::Contractualism;
    cases[2].subtheory_label = Subtheory::EthicsOfCare;
    const auto r = validate_dataset(cases);
    CHECK_FALSE(r.balanced);
    CHECK(r.subtheory_counts[index_of(Subtheory::Contractualism)] == 2);
  }
  SECTION("missing fields are counted") {
    auto cases = load_cases(testsupport::fixture("cases_3.csv"));
    cases[0].prior.reset();
    cases[1].summary.clear();
    const auto r = validate_dataset(cases);
    auto missing = [&](const std::string& field) {
      for (const auto& [f, n] : r.missing_fields) {
        if (f == field) return n;
      }
      return std::size_t{999};
    };
    CHECK(missing("prior") == 1);
    CHECK(missing("summary") == 1);
    CHECK(missing("selftext") == 0);
  }
}
