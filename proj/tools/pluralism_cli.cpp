// pluralism: command-line front end.
//
//   pluralism generate  --out DIR [--seed N] [--overlap O] [--cases-per-subtheory N]
//   pluralism ingest    --data FILE
//   pluralism train     --data FILE [--embeddings SPEC] [--seed N] [--out DIR]
//   pluralism evaluate  --data FILE --ablation features|transformers
//   pluralism analyze   [--model F] [--predictions F] [--data F] [--coords F]
//   pluralism annotate  --data FILE --endpoint URL
//
// Exit codes: 0 success, 1 domain failure, 2 usage or environment failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pluralism/pluralism.hpp"
#include "pluralism/run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pluralism;

namespace {

// Flag values; unset flags leave the config file (or default) alone.
struct Flags {
  std::string config;
  std::optional<std::string> data, embeddings, out, ablation, model, predictions, coords, endpoint;
  std::optional<std::uint64_t> seed;
  std::optional<double> temperature, overlap, rate;
  std::optional<std::size_t> folds, cases_per_subtheory, top_k;
};

RunConfig resolve(const Flags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (f.data) cfg.data = *f.data;
  if (f.embeddings) cfg.embeddings = *f.embeddings;
  if (f.out) cfg.out = *f.out;
  if (f.ablation) cfg.ablation = *f.ablation;
  if (f.seed) cfg.seed = *f.seed;
  if (f.temperature) cfg.stack.calibration_temperature = *f.temperature;
  if (f.folds) cfg.stack.folds = *f.folds;
  if (f.overlap) cfg.synth.overlap = *f.overlap;
  if (f.cases_per_subtheory) cfg.synth.cases_per_subtheory = *f.cases_per_subtheory;
  if (f.model) cfg.analyze.model = *f.model;
  if (f.predictions) cfg.analyze.predictions = *f.predictions;
  if (f.coords) cfg.analyze.coords = *f.coords;
  if (f.top_k) cfg.analyze.top_k = *f.top_k;
  if (f.endpoint) cfg.annotation.endpoint = *f.endpoint;
  if (f.rate) cfg.rate_limit = *f.rate;
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

fs::path prepare_out(const RunConfig& cfg) {
  const fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  return dir;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

// run.json: effective config, derived seeds, input digest and versions. No
// timestamp, so equal inputs give an equal file.
void write_run_json(const fs::path& dir, const std::string& command, const RunConfig& cfg) {
  json run = {{"tool", "pluralism"},
              {"version", std::string(kToolVersion)},
              {"command", command},
              {"config", to_json(cfg)},
              {"versions",
               {{"artifact_format", kStackFormatVersion},
                {"report_schema", kReportSchemaVersion},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                {"cpp_httplib", CPPHTTPLIB_VERSION},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)}}}};
  if (!cfg.data.empty()) run["data_sha256"] = file_digest(cfg.data);
  write_text(dir / "run.json", run.dump(2) + "\n");
}

std::vector<Case> load_data(const RunConfig& cfg) {
  if (cfg.data.empty()) throw ContractError("--data is required");
  if (!fs::exists(cfg.data)) throw IoError("cannot open case file: " + cfg.data);
  return load_cases(cfg.data);
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_generate(const RunConfig& cfg) {
  const SynthDataset ds = generate(cfg.seeded_synth());
  const fs::path dir = prepare_out(cfg);
  save_cases(dir / "cases.jsonl", ds.cases);
  save_embeddings(dir / "embeddings.jsonl", ds.embeddings);
  write_run_json(dir, "generate", cfg);
  std::cout << "wrote " << ds.cases.size() << " cases to " << (dir / "cases.jsonl").string() << "\n";
  return 0;
}

int cmd_ingest(const RunConfig& cfg) {
  if (cfg.data.empty()) throw ContractError("--data is required");
  std::ifstream probe(cfg.data, std::ios::binary);
  if (!probe) throw IoError("cannot open case file: " + cfg.data);
  const fs::path dir = prepare_out(cfg);
  write_run_json(dir, "ingest", cfg);
  std::vector<Case> cases;
  try {
    cases = load_cases(cfg.data);
  } catch (const DataError& e) {
    const json failure = {{"valid", false}, {"error", e.what()}};
    std::cout << failure.dump(2) << "\n";
    write_text(dir / "dataset_report.json", failure.dump(2) + "\n");
    return 1;
  }
  json report = to_json(validate_dataset(cases));
  report["valid"] = true;
  std::cout << report.dump(2) << "\n";
  write_text(dir / "dataset_report.json", report.dump(2) + "\n");
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const auto cases = load_data(cfg);
  const EmbeddingTable emb = provide_embeddings(EmbeddingProviderSpec::parse(cfg.embeddings), cases);
  const fs::path dir = prepare_out(cfg);
  write_run_json(dir, "train", cfg);

  const TrainRun run = train_and_evaluate(cases, &emb, cfg.seeded_stack(), cfg.fusion);
  save_stack(dir / "model.json", run.model);
  write_text(dir / "report.json", to_json(run.report).dump(2) + "\n");
  std::ostringstream preds;
  for (const auto& p : run.predictions) preds << prediction_to_json(p).dump() << "\n";
  write_text(dir / "predictions.jsonl", preds.str());

  std::cout << "config " << run.report.config << "  n_test " << run.report.n << "  accuracy "
            << fixed(run.report.exact_match_accuracy) << "  macro_f1 " << fixed(run.report.macro_f1) << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  AblationMode mode;
  if (cfg.ablation == "features") {
    mode = AblationMode::Features;
  } else if (cfg.ablation == "transformers") {
    mode = AblationMode::Transformers;
  } else {
    throw ContractError("--ablation must be features or transformers");
  }
  const auto cases = load_data(cfg);
  const EmbeddingTable emb = provide_embeddings(EmbeddingProviderSpec::parse(cfg.embeddings), cases);
  const fs::path dir = prepare_out(cfg);
  write_run_json(dir, "evaluate", cfg);

  const auto rows = run_ablations(cases, emb, cfg.seeded_stack(), mode);
  json table = {{"mode", cfg.ablation}, {"rows", json::array()}};
  table["test_case_ids"] = rows.front().test_ids;
  std::ostringstream text;
  text << "config    n     accuracy  macro_f1  H_raw   H_cal\n";
  for (const auto& row : rows) {
    if (row.test_ids != rows.front().test_ids) throw DataError("ablation arms disagree on the test set");
    const auto& r = row.report;
    table["rows"].push_back({{"name", row.name},
                             {"n", r.n},
                             {"exact_match_accuracy", r.exact_match_accuracy},
                             {"macro_f1", r.macro_f1},
                             {"mean_entropy_raw", r.mean_entropy_raw},
                             {"mean_entropy_calibrated", r.mean_entropy_calibrated}});
    char line[160];
    std::snprintf(line, sizeof line, "%-8s  %-4zu  %.4f    %.4f    %.4f  %.4f\n", row.name.c_str(), r.n,
                  r.exact_match_accuracy, r.macro_f1, r.mean_entropy_raw, r.mean_entropy_calibrated);
    text << line;
  }
  write_text(dir / "ablation.json", table.dump(2) + "\n");
  write_text(dir / "ablation.txt", text.str());
  std::cout << text.str();
  return 0;
}

struct PredictionRecord {
  std::string case_id;
  std::size_t label = 0;
  Distribution raw;
};

std::vector<PredictionRecord> load_predictions(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open predictions file: " + path.string());
  std::vector<PredictionRecord> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (text::trim(line).empty()) continue;
    const auto j = json::parse(line, nullptr, false);
    try {
      if (j.is_discarded()) throw std::runtime_error("not JSON");
      PredictionRecord r{j.at("case_id").get<std::string>(), j.at("label_index").get<std::size_t>(),
                         j.at("raw").get<Distribution>()};
      if (r.raw.size() != kNumSubtheories || r.label >= kNumSubtheories || !is_distribution(r.raw)) {
        throw std::runtime_error("bad distribution or label");
      }
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw DataError("predictions line " + std::to_string(n) + ": " + e.what());
    }
  }
  if (out.empty()) throw DataError("predictions file is empty: " + path.string());
  return out;
}

std::string csv_line(const csv::Record& rec) {
  std::ostringstream s;
  csv::write_record(s, rec);
  return s.str();
}

int cmd_analyze(const RunConfig& cfg, bool temperature_flag) {
  const fs::path model_path = cfg.analyze.model.empty() ? fs::path(cfg.out) / "model.json" : fs::path(cfg.analyze.model);
  const fs::path preds_path =
      cfg.analyze.predictions.empty() ? fs::path(cfg.out) / "predictions.jsonl" : fs::path(cfg.analyze.predictions);
  if (!fs::exists(model_path)) throw IoError("missing model artifact: " + model_path.string());
  if (!fs::exists(preds_path)) throw IoError("missing predictions file: " + preds_path.string());
  if (cfg.analyze.coords.empty() && cfg.data.empty()) {
    throw ContractError("analyze needs --data (to project supervectors) or --coords");
  }
  const TrainedStack model = load_stack(model_path);
  const auto preds = load_predictions(preds_path);
  const double T = temperature_flag ? cfg.stack.calibration_temperature : model.temperature;
  const fs::path dir = prepare_out(cfg);
  write_run_json(dir, "analyze", cfg);

  std::vector<Distribution> raw;
  std::vector<std::size_t> labels;
  std::vector<std::string> ids;
  for (const auto& p : preds) {
    raw.push_back(p.raw);
    labels.push_back(p.label);
    ids.push_back(p.case_id);
  }
  const EvalReport report = evaluate(raw, labels, T, describe_fusion(model.fusion));
  std::vector<Distribution> cal;
  for (const auto& d : raw) cal.push_back(calibrate(d, T));

  // simplex_points.csv: predicted school mass after calibration.
  std::string pts = csv_line({"case_id", "x", "y", "entropy_raw", "entropy_calibrated"});
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto [x, y] = simplex_coords(school_aggregate(cal[i]));
    pts += csv_line({ids[i], text::format_double(x), text::format_double(y), text::format_double(entropy(raw[i])),
                     text::format_double(entropy(cal[i]))});
  }
  write_text(dir / "simplex_points.csv", pts);

  const RealMatrix overlap = overlap_matrix(report.confusion);
  std::string ov = csv_line({"sub_i", "sub_j", "score"});
  for (std::size_t i = 0; i < kNumSubtheories; ++i) {
    for (std::size_t j = i + 1; j < kNumSubtheories; ++j) {
      ov += csv_line({std::string(kSubtheoryNames[i]), std::string(kSubtheoryNames[j]),
                      text::format_double(overlap[i][j])});
    }
  }
  write_text(dir / "overlap.csv", ov);

  const ConfidenceStrata strata = confidence_strata(cal, labels, cfg.analyze.bin_width);
  std::string st = csv_line({"bin_low", "bin_high", "coverage", "accuracy"});
  json strata_json = json::array();
  for (const auto& b : strata) {
    st += csv_line({text::format_double(b.low), text::format_double(b.high), text::format_double(b.coverage),
                    b.accuracy ? text::format_double(*b.accuracy) : std::string()});
    strata_json.push_back({{"bin_low", b.low},
                           {"bin_high", b.high},
                           {"count", b.count},
                           {"coverage", b.coverage},
                           {"accuracy", b.accuracy ? json(*b.accuracy) : json(nullptr)}});
  }
  write_text(dir / "confidence_strata.csv", st);

  // Projection: external coordinates win, otherwise PCA of the supervectors.
  Matrix coords;
  std::string projection_source;
  std::vector<Case> cases;
  if (!cfg.data.empty()) cases = load_data(cfg);
  if (!cfg.analyze.coords.empty()) {
    coords = external_projection(ids, load_external_coordinates(cfg.analyze.coords));
    projection_source = "external";
  } else {
    const EmbeddingTable emb = provide_embeddings(EmbeddingProviderSpec::parse(cfg.embeddings), cases);
    Matrix sv(0, total_width(emb.dims()));
    for (const auto& id : ids) sv.append_row(build_supervector(emb, id));
    const Projection proj = project_2d(sv);
    coords = proj.coords;
    projection_source = "pca";
  }
  std::string pr = csv_line({"case_id", "x", "y", "label", "predicted"});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    pr += csv_line({ids[i], text::format_double(coords(i, 0)), text::format_double(coords(i, 1)),
                    std::string(kSubtheoryNames[labels[i]]), std::string(kSubtheoryNames[argmax(cal[i])])});
  }
  write_text(dir / "projection_2d.csv", pr);

  // Prior positions of the same cases, when the dataset is at hand.
  if (!cases.empty()) {
    std::map<std::string, const Case*> by_id;
    for (const Case& c : cases) by_id[c.case_id] = &c;
    std::string sp = csv_line({"case_id", "x", "y", "alpha", "beta", "gamma"});
    for (const auto& id : ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end() || !it->second->prior) continue;
      const PriorSimplex& p = *it->second->prior;
      const auto [x, y] = simplex_coords(p);
      sp += csv_line({id, text::format_double(x), text::format_double(y), text::format_double(p.alpha()),
                      text::format_double(p.beta()), text::format_double(p.gamma())});
    }
    write_text(dir / "simplex_priors.csv", sp);
  }

  json bridges = json::array();
  for (const Bridge& b : bridge_theories(overlap, cfg.analyze.top_k)) {
    bridges.push_back({{"sub_i", std::string(kSubtheoryNames[b.i])},
                       {"sub_j", std::string(kSubtheoryNames[b.j])},
                       {"same_school", b.i / kSubtheoriesPerSchool == b.j / kSubtheoriesPerSchool},
                       {"score", b.score}});
  }
  json analytics = {{"schema_version", kReportSchemaVersion},
                    {"report", to_json(report)},
                    {"temperature", T},
                    {"entropy", {{"mean_raw", report.mean_entropy_raw}, {"mean_calibrated", report.mean_entropy_calibrated}}},
                    {"bridge_theories", std::move(bridges)},
                    {"confidence_source", "calibrated"},
                    {"confidence_strata", std::move(strata_json)},
                    {"projection_source", projection_source}};
  write_text(dir / "analytics.json", analytics.dump(2) + "\n");
  std::cout << "mean entropy " << fixed(report.mean_entropy_raw) << " -> " << fixed(report.mean_entropy_calibrated)
            << " at T=" << text::format_double(T) << "\n";
  return 0;
}

int cmd_annotate(const RunConfig& cfg) {
  cfg.annotation.validate();
  if (!(cfg.rate_limit > 0.0)) throw ContractError("--rate must be > 0");
  resolve_token(cfg.annotation);  // fails before any request is made
  auto cases = load_data(cfg);
  const fs::path dir = prepare_out(cfg);
  write_run_json(dir, "annotate", cfg);

  const auto results = annotate_dataset(cfg.annotation, PromptTemplate::standard(), cases, cfg.rate_limit);
  std::size_t failed = 0;
  std::ostringstream sidecar;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].ok()) {
      cases[i].prior = results[i].prior;
    } else {
      ++failed;
      sidecar << json{{"case_id", results[i].case_id}, {"error", results[i].error}}.dump() << "\n";
    }
  }
  const fs::path annotated = dir / ("annotated" + fs::path(cfg.data).extension().string());
  save_cases(annotated, cases);
  write_text(dir / "annotation_failures.jsonl", sidecar.str());
  std::cout << "annotated " << results.size() - failed << " of " << results.size() << " cases\n";
  if (!results.empty() && failed == results.size()) {
    std::cerr << "error: every case failed annotation\n";
    return 1;
  }
  return 0;
}

template <class Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const EnvironmentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ethical subtheory classification with stacked learners"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  Flags f;

  auto common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON run configuration");
    sub->add_option("--out", f.out, "Output directory");
    sub->add_option("--seed", f.seed, "Global seed");
  };
  auto data_opts = [&f](CLI::App* sub) {
    sub->add_option("--data", f.data, "Case file (.csv or .jsonl)");
    sub->add_option("--embeddings", f.embeddings, "Embedding file, hash or hash:d1,d2,d3");
  };
  auto stack_opts = [&f](CLI::App* sub) {
    sub->add_option("--temperature", f.temperature, "Calibration temperature");
    sub->add_option("--folds", f.folds, "Out-of-fold count");
  };

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset and its embeddings");
  common(gen);
  gen->add_option("--overlap", f.overlap, "Subtheory overlap in [0, 1]");
  gen->add_option("--cases-per-subtheory", f.cases_per_subtheory, "Cases per subtheory");

  auto* ingest = app.add_subcommand("ingest", "Validate a case file and print its report");
  common(ingest);
  ingest->add_option("--data", f.data, "Case file (.csv or .jsonl)");

  auto* train = app.add_subcommand("train", "Fit the stack and evaluate on the held-out split");
  common(train);
  data_opts(train);
  stack_opts(train);

  auto* eval = app.add_subcommand("evaluate", "Run a four-arm ablation");
  common(eval);
  data_opts(eval);
  stack_opts(eval);
  eval->add_option("--ablation", f.ablation, "features or transformers");

  auto* analyze = app.add_subcommand("analyze", "Write plot data and analytics for a trained run");
  common(analyze);
  data_opts(analyze);
  analyze->add_option("--temperature", f.temperature, "Calibration temperature (default: the model's)");
  analyze->add_option("--model", f.model, "Model artifact (default <out>/model.json)");
  analyze->add_option("--predictions", f.predictions, "Predictions (default <out>/predictions.jsonl)");
  analyze->add_option("--coords", f.coords, "External case_id,x,y coordinates");
  analyze->add_option("--top-k", f.top_k, "Bridge theories to report");

  auto* annotate = app.add_subcommand("annotate", "Score priors through a chat-completion endpoint");
  common(annotate);
  annotate->add_option("--data", f.data, "Case file (.csv or .jsonl)");
  annotate->add_option("--endpoint", f.endpoint, "Chat-completion URL");
  annotate->add_option("--rate", f.rate, "Requests per second");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  return guarded([&]() -> int {
    const RunConfig cfg = resolve(f);
    if (gen->parsed()) return cmd_generate(cfg);
    if (ingest->parsed()) return cmd_ingest(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (eval->parsed()) return cmd_evaluate(cfg);
    if (analyze->parsed()) return cmd_analyze(cfg, f.temperature.has_value());
    return cmd_annotate(cfg);
  });
}
