#include <catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "pluralism/case_io.hpp"
#include "pluralism/context_encoder.hpp"
#include "pluralism/embedding.hpp"
#include "support.hpp"

using namespace pluralism;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

TEST_CASE("build_supervector concatenates E1, E2, E3", "[embedding]") {
  const auto table = load_embeddings(testsupport::fixture("embeddings_small.jsonl"));
  CHECK(build_supervector(table, "c001") == std::vector<double>{1, 0, 0, 1, 1, 1});
  CHECK_THROWS_WITH(build_supervector(table, "nope"), ContainsSubstring("'nope'"));
}

TEST_CASE("default-dimension fixture loads as 1920-wide supervectors", "[embedding]") {
  const auto table = load_embeddings(testsupport::fixture("embeddings_3.jsonl"));
  CHECK(table.dims() == kDefaultEmbeddingDims);
  CHECK(table.size() == 3);
  for (const auto& id : {"c001", "c002", "c003"}) {
    const auto sv = build_supervector(table, id);
    REQUIRE(sv.size() == 1920);
    for (double v : sv) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("embedding file loader rejects malformed files", "[embedding]") {
  CHECK_THROWS_WITH(load_embeddings(testsupport::fixture("embeddings_bad_dims.jsonl")),
                    ContainsSubstring("e1 has length 3, expected 2"));
  CHECK_THROWS_AS(load_embeddings(testsupport::fixture("missing.jsonl")), IoError);
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return read_embeddings(in);
  };
  CHECK_THROWS_WITH(parse(""), ContainsSubstring("missing header"));
  CHECK_THROWS_WITH(parse(R"({"format":"other","version":1,"dims":[1,1,1]})"), ContainsSubstring("format"));
  CHECK_THROWS_WITH(parse(R"({"format":"ethics-embed","version":2,"dims":[1,1,1]})"), ContainsSubstring("version"));
  CHECK_THROWS_WITH(parse(R"({"format":"ethics-embed","version":1,"dims":[1,0,1]})"), ContainsSubstring("dims"));
  const std::string header = R"({"format":"ethics-embed","version":1,"dims":[1,1,1]})";
  CHECK_THROWS_WITH(parse(header + "\n" + R"({"case_id":"a","e1":[1],"e2":[1]})"), ContainsSubstring("'e3'"));
  CHECK_THROWS_WITH(parse(header + "\n" + R"({"case_id":"a","e1":[1],"e2":[1],"e3":[1]})" + "\n" +
                          R"({"case_id":"a","e1":[1],"e2":[1],"e3":[1]})"),
                    ContainsSubstring("duplicate"));
  CHECK_THROWS_WITH(parse(header + "\n" + R"({"case_id":"a","e1":[1e300],"e2":[1],"e3":[1]})"),
                    ContainsSubstring("non-finite"));
}

TEST_CASE("embedding tables round-trip bit-exactly", "[embedding][property]") {
  Rng rng(9);
  EmbeddingTable table({3, 5, 4});
  for (int i = 0; i < 50; ++i) {
    EmbeddingTable::Segments seg;
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t j = 0; j < table.dims()[k]; ++j) seg[k].push_back(static_cast<float>(rng.normal() * 1e3));
    }
    table.insert("id" + std::to_string(i), seg);
  }
  std::stringstream buf;
  write_embeddings(buf, table);
  const auto first_line = buf.str().substr(0, buf.str().find('\n'));
  CHECK(first_line == R"({"format":"ethics-embed","version":1,"dims":[3,5,4]})");
  CHECK(read_embeddings(buf) == table);
}

TEST_CASE("hash_embed is deterministic, unit-norm and salt-sensitive", "[embedding]") {
  const auto a = hash_embed("A nurse hides a diagnosis to calm a patient", 384, 1);
  CHECK(a == hash_embed("A nurse hides a diagnosis to calm a patient", 384, 1));
  double n = 0.0;
  for (double x : a) n += x * x;
  CHECK_THAT(std::sqrt(n), WithinAbs(1.0, 1e-6));
  CHECK(hash_embed("", 16, 1) == std::vector<double>(16, 0.0));
  CHECK(hash_embed("!!! ...", 16, 1) == std::vector<double>(16, 0.0));
  CHECK_THROWS_AS(hash_embed("x", 0, 1), ContractError);

  // No salt collision over the fixture corpus.
  for (const Case& c : load_cases(testsupport::fixture("cases_3.csv"))) {
    for (const std::string* text : {&c.selftext, &c.summary}) {
      CHECK(hash_embed(*text, 768, 1) != hash_embed(*text, 768, 2));
      CHECK(hash_embed(*text, 768, 2) != hash_embed(*text, 768, 3));
    }
  }
}

TEST_CASE("hash_embed pins reference values", "[embedding]") {
  // "a b a": token a counted twice, b once, in distinct buckets.
  const auto v = hash_embed("a b a", 1 << 20, 7);
  std::vector<double> nonzero;
  for (double x : v) {
    if (x != 0.0) nonzero.push_back(std::abs(x));
  }
  std::sort(nonzero.begin(), nonzero.end());
  REQUIRE(nonzero.size() == 2);
  CHECK_THAT(nonzero[0], WithinAbs(1.0 / std::sqrt(5.0), 1e-12));
  CHECK_THAT(nonzero[1], WithinAbs(2.0 / std::sqrt(5.0), 1e-12));
}

TEST_CASE("provider specs parse and the hash provider fills every case", "[embedding]") {
  CHECK(EmbeddingProviderSpec::parse("hash").dims == kDefaultEmbeddingDims);
  const auto spec = EmbeddingProviderSpec::parse("hash:4,8,8");
  CHECK(spec.kind == EmbeddingProviderKind::Hash);
  CHECK(spec.dims == EmbeddingDims{4, 8, 8});
  CHECK(spec.describe() == "hash:4,8,8");
  CHECK(EmbeddingProviderSpec::parse("data/e.jsonl").kind == EmbeddingProviderKind::File);
  CHECK(EmbeddingProviderSpec::parse("https://x/embed").kind == EmbeddingProviderKind::Http);
  CHECK_THROWS_AS(EmbeddingProviderSpec::parse("hash:4,8"), ContractError);
  CHECK_THROWS_AS(EmbeddingProviderSpec::parse("hash:4,0,8"), ContractError);
  CHECK_THROWS_AS(EmbeddingProviderSpec::parse("hash:4,2.5,8"), ContractError);

  const auto cases = load_cases(testsupport::fixture("cases_3.csv"));
  const auto table = provide_embeddings(spec, cases);
  CHECK(table.size() == 3);
  CHECK(build_supervector(table, "c002").size() == 20);
  CHECK_THROWS_AS(provide_embeddings(EmbeddingProviderSpec::parse("http://localhost:1/e"), cases), ContractError);
  const auto from_file = provide_embeddings(EmbeddingProviderSpec::parse(testsupport::fixture("embeddings_3.jsonl").string()), cases);
  CHECK(from_file.dims() == kDefaultEmbeddingDims);
}

TEST_CASE("context encoder vocabularies and widths", "[context]") {
  auto make = [](std::string sev) {
    Case c;
    c.context.severity = std::move(sev);
    return c;
  };
  SECTION("severities {high, low, high}") {
    const auto enc = fit_context_encoder({make("high"), make("low"), make("high")});
    CHECK(enc.vocabularies()[0] == std::vector<std::string>{"high", "low"});
    CHECK(enc.width() == 2);
    ContextualFeatures x;
    x.severity = "high";
    CHECK(enc.encode(x) == std::vector<double>{1, 0});
    x.severity = "extreme";
    CHECK(enc.encode(x) == std::vector<double>{0, 0});
  }
  SECTION("missing field has empty vocabulary") {
    const auto enc = fit_context_encoder({make("high")});
    CHECK(enc.vocabularies()[1].empty());
    CHECK(enc.width() == 1);
  }
  SECTION("3+2+3+4+5+5 = 22") {
    std::vector<Case> cases(5);
    const std::array<const char*, 5> p = {"p1", "p2", "p3", "p4", "p5"};
    for (std::size_t i = 0; i < 5; ++i) {
      auto& x = cases[i].context;
      x.severity = "s" + std::to_string(i % 3);
      x.duration = "d" + std::to_string(i % 2);
      x.utility = "u" + std::to_string(i % 3);
      x.moral_intention = "m" + std::to_string(i % 4);
      x.principles_upheld = {p[i]};
      x.principles_violated = {std::string("v") + p[i]};
    }
    const auto enc = fit_context_encoder(cases);
    CHECK(enc.width() == 22);
    ContextualFeatures x;
    x.principles_upheld = {"p2", "p4", "unknown"};
    const auto v = enc.encode(x);
    double upheld = 0.0;
    for (std::size_t j = 12; j < 17; ++j) upheld += v[j];
    CHECK(upheld == 2.0);
  }
  CHECK_THROWS_AS(fit_context_encoder({}), ContractError);
}

TEST_CASE("context encodings have constant width and bounded blocks", "[context][property]") {
  const auto cases = load_cases(testsupport::fixture("cases_3.csv"));
  const auto enc = fit_context_encoder(cases);
  for (const Case& c : cases) {
    const auto v = encode_context(enc, c.context);
    REQUIRE(v.size() == enc.width());
    std::size_t offset = 0;
    for (std::size_t f = 0; f < 6; ++f) {
      double s = 0.0;
      for (std::size_t j = 0; j < enc.vocabularies()[f].size(); ++j) s += v[offset + j];
      if (f < 4) CHECK(s == 1.0);
      offset += enc.vocabularies()[f].size();
    }
  }
}
