#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "pluralism/pluralism.hpp"
#include "support.hpp"

using namespace pluralism;
using Catch::Matchers::ContainsSubstring;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs the CLI with the given arguments, capturing both streams.
Outcome cli(const fs::path& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.string() + "' && '" + std::string(PLURALISM_CLI) + "' " + args + " > '" +
                          out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = slurp(out);
  o.err = slurp(err);
  return o;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Small stack settings so a CLI train stays in the low seconds.
const char* kQuickConfig = R"({
  "stack": {"forest": {"n_trees": 20, "max_depth": 6}, "boost": {"n_rounds": 10},
            "linear": {"epochs": 5}, "meta": {"n_rounds": 10}},
  "synth": {"embedding_dims": [4, 6, 6]}
})";

std::string chat_body(const std::string& content) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

}  // namespace

TEST_CASE("cli without a subcommand is a usage error", "[cli]") {
  const auto dir = testsupport::scratch_dir("cli_usage");
  CHECK(cli(dir, "").code == 2);
  CHECK(cli(dir, "frobnicate").code == 2);
  CHECK(cli(dir, "--help").code == 0);
  const auto v = cli(dir, "--version");
  CHECK(v.code == 0);
  CHECK_THAT(v.out, ContainsSubstring(std::string(kToolVersion)));
}

TEST_CASE("ingest exit codes follow the error taxonomy", "[cli][ingest]") {
  const auto dir = testsupport::scratch_dir("cli_ingest");
  const auto ok = cli(dir, "ingest --data " + testsupport::fixture("cases_3.csv").string() + " --out ok");
  CHECK(ok.code == 0);
  const auto report = json::parse(ok.out);
  CHECK(report["valid"] == true);
  CHECK(report["n_cases"] == 3);
  CHECK(report.contains("balanced"));
  CHECK(fs::exists(dir / "ok" / "dataset_report.json"));
  CHECK(fs::exists(dir / "ok" / "run.json"));

  const auto dup = cli(dir, "ingest --data " + testsupport::fixture("duplicate_id.csv").string() + " --out dup");
  CHECK(dup.code == 1);
  CHECK(json::parse(dup.out)["valid"] == false);

  CHECK(cli(dir, "ingest --data " + testsupport::fixture("label_mismatch.csv").string() + " --out mm").code == 1);
  CHECK(cli(dir, "ingest --data /nonexistent/cases.csv --out missing").code == 2);
  CHECK(cli(dir, "ingest --out nodata").code == 2);
}

TEST_CASE("config files are validated strictly", "[cli][config]") {
  const auto dir = testsupport::scratch_dir("cli_config");
  write_file(dir / "typo.json", R"({"stack": {"fodls": 5}})");
  const auto typo = cli(dir, "ingest --config typo.json --data " + testsupport::fixture("cases_3.csv").string());
  CHECK(typo.code == 2);
  CHECK_THAT(typo.err, ContainsSubstring("fodls"));
  write_file(dir / "type.json", R"({"seed": "forty-two"})");
  CHECK(cli(dir, "ingest --config type.json --data " + testsupport::fixture("cases_3.csv").string()).code == 2);
  CHECK(cli(dir, "ingest --config absent.json").code == 2);

  RunConfig cfg;
  apply_config_json(cfg, json::parse(R"({"seed": 7, "stack": {"temperature": 0.5, "meta": {"n_rounds": 3}}})"));
  CHECK(cfg.seed == 7);
  CHECK(cfg.stack.calibration_temperature == 0.5);
  CHECK(cfg.stack.meta.n_rounds == 3);
  CHECK(cfg.seeded_stack().forest.seed == derive_seed(7, "forest"));
  CHECK_THROWS_AS(apply_config_json(cfg, json::parse(R"({"fusion": {"blocks": [true, true]}})")), ContractError);
}

TEST_CASE("generate, train, analyze and evaluate end to end", "[cli][pipeline]") {
  const auto dir = testsupport::scratch_dir("cli_pipeline");
  write_file(dir / "quick.json", kQuickConfig);

  const auto gen = cli(dir, "generate --config quick.json --cases-per-subtheory 8 --out data");
  REQUIRE(gen.code == 0);
  REQUIRE(fs::exists(dir / "data" / "cases.jsonl"));
  REQUIRE(fs::exists(dir / "data" / "embeddings.jsonl"));

  const std::string train_args = "train --config quick.json --data data/cases.jsonl --embeddings data/embeddings.jsonl";
  const auto a = cli(dir, train_args + " --out run_a");
  REQUIRE(a.code == 0);
  CHECK_THAT(a.out, ContainsSubstring("accuracy"));
  const auto b = cli(dir, train_args + " --out run_b");
  REQUIRE(b.code == 0);

  SECTION("two runs with one seed agree exactly") {
    CHECK(slurp(dir / "run_a" / "report.json") == slurp(dir / "run_b" / "report.json"));
    CHECK(slurp(dir / "run_a" / "predictions.jsonl") == slurp(dir / "run_b" / "predictions.jsonl"));
    const auto ma = json::parse(slurp(dir / "run_a" / "model.json"));
    const auto mb = json::parse(slurp(dir / "run_b" / "model.json"));
    CHECK(ma["checksum"] == mb["checksum"]);
    const auto ra = json::parse(slurp(dir / "run_a" / "run.json"));
    CHECK(ra["command"] == "train");
    CHECK(ra["config"]["seed"] == 42);
    CHECK(ra.contains("data_sha256"));
    auto rb = json::parse(slurp(dir / "run_b" / "run.json"));
    auto ra_same = ra;
    ra_same["config"].erase("out");
    rb["config"].erase("out");
    CHECK(ra_same == rb);
    const auto report = json::parse(slurp(dir / "run_a" / "report.json"));
    CHECK(report["n"] == 30);
    CHECK(report["exact_match_accuracy"] >= 0.0);
    CHECK(report["exact_match_accuracy"] <= 1.0);
    CHECK(report["per_class"].size() == 15);
    CHECK(load_stack(dir / "run_a" / "model.json").n_classes == 15);
  }

  SECTION("a different seed changes the model") {
    REQUIRE(cli(dir, train_args + " --seed 5 --out run_c").code == 0);
    const auto ma = json::parse(slurp(dir / "run_a" / "model.json"));
    const auto mc = json::parse(slurp(dir / "run_c" / "model.json"));
    CHECK(ma["checksum"] != mc["checksum"]);
  }

  SECTION("analyze writes every plot table") {
    const auto an = cli(dir, "analyze --data data/cases.jsonl --embeddings data/embeddings.jsonl --out run_a");
    REQUIRE(an.code == 0);
    for (const char* f : {"simplex_points.csv", "overlap.csv", "confidence_strata.csv", "projection_2d.csv",
                          "simplex_priors.csv", "analytics.json"}) {
      INFO(f);
      CHECK(fs::exists(dir / "run_a" / f));
    }
    std::istringstream overlap(slurp(dir / "run_a" / "overlap.csv"));
    std::string line;
    std::size_t lines = 0;
    while (std::getline(overlap, line)) ++lines;
    CHECK(lines == 1 + 105);
    std::istringstream pts_in(slurp(dir / "run_a" / "simplex_points.csv"));
    CHECK(csv::parse(pts_in).records.size() == 1 + 30);
    std::istringstream strata_in(slurp(dir / "run_a" / "confidence_strata.csv"));
    const auto strata = csv::parse(strata_in);
    CHECK(strata.records.size() == 11);
    const auto analytics = json::parse(slurp(dir / "run_a" / "analytics.json"));
    CHECK(analytics["temperature"] == 0.6);

    const auto ext = cli(dir, "analyze --coords " + testsupport::fixture("coords_3.csv").string() + " --out run_a");
    CHECK(ext.code == 1);  // the fixture lacks the synthetic ids
    CHECK(cli(dir, "analyze --out run_a").code == 2);
    CHECK(cli(dir, "analyze --data data/cases.jsonl --model nothing.json --out run_a").code == 2);
  }

  SECTION("evaluate reports the four feature arms on one test set") {
    const auto ev = cli(dir, "evaluate --config quick.json --data data/cases.jsonl --embeddings data/embeddings.jsonl "
                             "--out ablate");
    REQUIRE(ev.code == 0);
    const auto table = json::parse(slurp(dir / "ablate" / "ablation.json"));
    std::vector<std::string> names;
    for (const auto& row : table["rows"]) names.push_back(row["name"]);
    CHECK(names == std::vector<std::string>{"Full", "SV+C", "N+P+SV", "SV"});
    CHECK(table["test_case_ids"].size() == 30);
    CHECK(fs::exists(dir / "ablate" / "ablation.txt"));
    REQUIRE(cli(dir, "evaluate --config quick.json --data data/cases.jsonl --embeddings data/embeddings.jsonl "
                     "--ablation transformers --out ablate_t")
                .code == 0);
    const auto tt = json::parse(slurp(dir / "ablate_t" / "ablation.json"));
    std::vector<std::string> tnames;
    for (const auto& row : tt["rows"]) tnames.push_back(row["name"]);
    CHECK(tnames == std::vector<std::string>{"All", "-E1", "-E2", "-E3"});
    CHECK(tt["test_case_ids"] == table["test_case_ids"]);
    CHECK(cli(dir, "evaluate --config quick.json --data data/cases.jsonl --ablation nope --out bad").code == 2);
  }
}

TEST_CASE("annotate talks to the endpoint and never writes the token", "[cli][annotate]") {
  const std::string secret = "sk-cli-secret-123";
  httplib::Server server;
  server.Post("/v1/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
    if (req.body.find("reports fraud") != std::string::npos) {
      res.status = 500;
      return;
    }
    res.set_content(chat_body(R"({"alpha": 0.6, "beta": 0.2, "gamma": 0.2})"), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";

  const auto dir = testsupport::scratch_dir("cli_annotate");
  write_file(dir / "ann.json", R"({"annotation": {"max_retries": 0}})");
  // The endpoint rejects the fraud case (c002), so one of three fails.
  const std::string args = "annotate --config ann.json --rate 50 --data " + testsupport::fixture("cases_3.csv").string() +
                           " --endpoint " + endpoint;

  ::unsetenv("ETHICS_LLM_TOKEN");
  const auto no_token = cli(dir, args + " --out none");
  CHECK(no_token.code == 2);
  CHECK_THAT(no_token.err, ContainsSubstring("ETHICS_LLM_TOKEN"));

  ::setenv("ETHICS_LLM_TOKEN", secret.c_str(), 1);
  const auto run = cli(dir, args + " --out ann");
  ::unsetenv("ETHICS_LLM_TOKEN");
  server.stop();
  th.join();

  INFO(run.err);
  REQUIRE(run.code == 0);
  const auto annotated = load_cases(dir / "ann" / "annotated.csv");
  REQUIRE(annotated.size() == 3);
  const auto failures = slurp(dir / "ann" / "annotation_failures.jsonl");
  std::size_t changed = 0;
  for (const Case& c : annotated) {
    if (c.prior && c.prior->alpha() == 0.6) ++changed;
  }
  const auto n_failed = static_cast<std::size_t>(std::count(failures.begin(), failures.end(), '\n'));
  CHECK(changed == 2);
  CHECK(n_failed == 1);
  CHECK_THAT(failures, ContainsSubstring("c002"));
  for (const auto& entry : fs::directory_iterator(dir / "ann")) {
    INFO(entry.path().string());
    CHECK(slurp(entry.path()).find(secret) == std::string::npos);
  }
  CHECK(run.out.find(secret) == std::string::npos);
  CHECK(run.err.find(secret) == std::string::npos);
}

TEST_CASE("default training on low-overlap synthetic data reaches 0.85", "[cli][pipeline]") {
  const auto dir = testsupport::scratch_dir("cli_low_overlap");
  REQUIRE(cli(dir, "generate --overlap 0.1 --out data").code == 0);
  REQUIRE(cli(dir, "train --data data/cases.jsonl --embeddings data/embeddings.jsonl --out run").code == 0);
  const auto report = json::parse(slurp(dir / "run" / "report.json"));
  CHECK(report["n"] == 90);
  CHECK(report["exact_match_accuracy"].get<double>() >= 0.85);
}

TEST_CASE("annotate writes one prior per case when every reply is valid", "[cli][annotate]") {
  httplib::Server server;
  server.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(chat_body(R"({"alpha": 0.1, "beta": 0.1, "gamma": 0.8})"), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const auto dir = testsupport::scratch_dir("cli_annotate5");
  auto cases = load_cases(testsupport::fixture("cases_3.csv"));
  while (cases.size() < 5) {
    Case extra = cases[cases.size() % 3];
    extra.case_id = "c00" + std::to_string(cases.size() + 1);
    cases.push_back(extra);
  }
  save_cases(dir / "five.jsonl", cases);
  ::setenv("ETHICS_LLM_TOKEN", "sk-five", 1);
  const auto run = cli(dir, "annotate --rate 50 --data five.jsonl --out ann --endpoint http://127.0.0.1:" +
                                std::to_string(port) + "/v1/chat/completions");
  ::unsetenv("ETHICS_LLM_TOKEN");
  server.stop();
  th.join();

  REQUIRE(run.code == 0);
  const auto annotated = load_cases(dir / "ann" / "annotated.jsonl");
  REQUIRE(annotated.size() == 5);
  for (const Case& c : annotated) CHECK(c.prior->gamma() == 0.8);
  CHECK(slurp(dir / "ann" / "annotation_failures.jsonl").empty());
}
