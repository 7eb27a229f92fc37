#include <catch_amalgamated.hpp>

#include <cmath>

#include "pluralism/case_io.hpp"
#include "pluralism/fusion.hpp"
#include "pluralism/pipeline.hpp"
#include "support.hpp"

using namespace pluralism;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

FusionInputs full_inputs(const EmbeddingDims& dims, std::size_t context_width) {
  FusionInputs in;
  in.prior = prior_feature_vector(PriorSimplex::exact(0.5, 0.3, 0.2));
  EmbeddingTable::Segments seg;
  for (std::size_t k = 0; k < 3; ++k) seg[k].assign(dims[k], static_cast<float>(k + 1));
  in.embeddings = seg;
  in.context = std::vector<double>(context_width, 1.0);
  return in;
}

}  // namespace

TEST_CASE("full fusion on default dims is 9 + 1920 + 22 wide", "[fusion]") {
  const auto v = assemble(FusionConfig{}, full_inputs(kDefaultEmbeddingDims, 22));
  CHECK(v.values.size() == 1951);
  REQUIRE(v.layout.size() == 3);
  CHECK(v.layout[0] == Segment{"N_P", 0, 9});
  CHECK(v.layout[1] == Segment{"SV", 9, 1920});
  CHECK(v.layout[2] == Segment{"C", 1929, 22});
  CHECK(layout_width(v.layout) == v.values.size());
}

TEST_CASE("SV with E2 and E3 only is 1536 wide and keeps E order", "[fusion]") {
  FusionConfig cfg{{false, true, false}, {false, true, true}};
  const auto v = assemble(cfg, full_inputs(kDefaultEmbeddingDims, 22));
  CHECK(v.values.size() == 1536);
  CHECK(v.values.front() == 2.0);
  CHECK(v.values.back() == 3.0);
}

TEST_CASE("assemble reports the missing block", "[fusion]") {
  FusionInputs in = full_inputs({2, 2, 2}, 3);
  in.prior.reset();
  CHECK_THROWS_WITH(assemble(FusionConfig{}, in), ContainsSubstring("N_P"));
  in = full_inputs({2, 2, 2}, 3);
  in.context.reset();
  CHECK_THROWS_WITH(assemble(FusionConfig{}, in), ContainsSubstring("block C"));
  CHECK_THROWS_AS(assemble(FusionConfig{{false, false, false}, {true, true, true}}, in), ContractError);
  CHECK_THROWS_AS(assemble(FusionConfig{{false, true, false}, {false, false, false}}, in), ContractError);
}

TEST_CASE("dropping a block shrinks the vector by its width", "[fusion][property]") {
  const auto in = full_inputs({4, 6, 8}, 5);
  const std::size_t widths[3] = {9, 18, 5};
  for (unsigned mask = 1; mask < 8; ++mask) {
    FusionConfig cfg{{(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0}, {true, true, true}};
    const auto v = assemble(cfg, in);
    CHECK(v.values == assemble(cfg, in).values);
    std::size_t expected = 0;
    std::size_t offset = 0;
    std::size_t seg = 0;
    for (std::size_t b = 0; b < 3; ++b) {
      if (!cfg.blocks[b]) continue;
      CHECK(v.layout[seg].offset == offset);
      CHECK(v.layout[seg].length == widths[b]);
      CHECK(v.layout[seg].name == kBlockNames[b]);
      offset += widths[b];
      expected += widths[b];
      ++seg;
    }
    CHECK(v.values.size() == expected);
  }
}

TEST_CASE("standardization", "[fusion][scaler]") {
  SECTION("column [1, 3] maps to [-1, 1]") {
    const Matrix x = Matrix::from_rows({{1.0}, {3.0}});
    const auto s = standardize_fit(x);
    const auto y = standardize_apply(s, x);
    CHECK(y(0, 0) == -1.0);
    CHECK(y(1, 0) == 1.0);
  }
  SECTION("constant column passes through") {
    const Matrix x = Matrix::from_rows({{5.0, 1.0}, {5.0, 2.0}, {5.0, 4.0}});
    const auto y = standardize_apply(standardize_fit(x), x);
    for (std::size_t i = 0; i < 3; ++i) CHECK(y(i, 0) == 5.0);
  }
  SECTION("fitted data has zero column means and unit variance") {
    Rng rng(2);
    Matrix x(0, 6);
    for (int i = 0; i < 40; ++i) {
      std::vector<double> row(6);
      for (std::size_t j = 0; j < 6; ++j) row[j] = rng.normal() * static_cast<double>(j + 1) + 10.0 * static_cast<double>(j);
      x.append_row(row);
    }
    const auto y = standardize_fit(x).apply(x);
    for (std::size_t j = 0; j < 6; ++j) {
      double m = 0.0;
      double v = 0.0;
      for (std::size_t i = 0; i < 40; ++i) m += y(i, j);
      m /= 40.0;
      for (std::size_t i = 0; i < 40; ++i) v += (y(i, j) - m) * (y(i, j) - m);
      CHECK(std::abs(m) <= 1e-9);
      CHECK_THAT(v / 40.0, WithinAbs(1.0, 1e-9));
    }
  }
  SECTION("width mismatch and empty input") {
    const auto s = standardize_fit(Matrix::from_rows({{1.0, 2.0}}));
    CHECK_THROWS_AS(s.apply(std::vector<double>{1.0}), ContractError);
    CHECK_THROWS_AS(standardize_fit(Matrix(0, 3)), ContractError);
  }
}

TEST_CASE("featurize_case wires the fixture dataset into the declared layout", "[fusion]") {
  const auto cases = load_cases(testsupport::fixture("cases_3.csv"));
  const auto emb = load_embeddings(testsupport::fixture("embeddings_3.jsonl"));
  const auto enc = fit_context_encoder(cases);
  const auto v = featurize_case(cases[0], &emb, FusionConfig{}, enc);
  CHECK(v.values.size() == 9 + 1920 + enc.width());
  CHECK(v.values[0] == cases[0].prior->alpha());
  CHECK(v.values[9] == static_cast<double>(emb.at("c001")[0][0]));

  Case no_prior = cases[0];
  no_prior.prior.reset();
  CHECK_THROWS_WITH(featurize_case(no_prior, &emb, FusionConfig{}, enc), ContainsSubstring("no prior"));
  CHECK_THROWS_AS(featurize_case(cases[0], nullptr, FusionConfig{}, enc), ContractError);
}
