#pragma once

// Single-file model artifact:
//   {"format":"ethics-stack","version":1,"created":"...","checksum":"<sha256>","payload":{...}}
// The checksum is the SHA-256 of the payload serialized canonically (sorted
// keys, no whitespace). Trees are stored as nested node records.

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pluralism/error.hpp"
#include "pluralism/stack.hpp"

namespace pluralism {

inline constexpr std::string_view kArtifactFormat = "ethics-stack";

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw ArtifactError("sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace detail {

using nlohmann::json;

inline json node_to_json(const Tree& tree, std::size_t i) {
  const TreeNode& n = tree.nodes[i];
  if (n.is_leaf()) return json{{"value", n.value}};
  return json{{"feature", n.feature},
              {"threshold", n.threshold},
              {"left", node_to_json(tree, static_cast<std::size_t>(n.left))},
              {"right", node_to_json(tree, static_cast<std::size_t>(n.right))}};
}

/// Rebuilds breadth-first with sibling pairs adjacent, which reproduces the
/// node order the growing engine emits.
inline Tree tree_from_json(const json& root) {
  Tree tree;
  std::vector<const json*> queue = {&root};
  tree.nodes.emplace_back();
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const json& j = *queue[head];
    TreeNode& node = tree.nodes[head];
    if (j.contains("value")) {
      node.value = j.at("value").get<std::vector<double>>();
      continue;
    }
    node.feature = j.at("feature").get<int>();
    node.threshold = j.at("threshold").get<double>();
    node.left = static_cast<int>(tree.nodes.size());
    node.right = node.left + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    queue.push_back(&j.at("left"));
    queue.push_back(&j.at("right"));
  }
  return tree;
}

inline json boost_to_json(const BoostModel& m) {
  json rounds = json::array();
  for (const auto& round : m.rounds) {
    json r = json::array();
    for (const Tree& t : round) r.push_back(node_to_json(t, 0));
    rounds.push_back(std::move(r));
  }
  return json{{"n_features", m.n_features}, {"n_classes", m.n_classes}, {"learning_rate", m.learning_rate},
              {"rounds", std::move(rounds)}};
}

inline BoostModel boost_from_json(const json& j) {
  BoostModel m;
  m.n_features = j.at("n_features").get<std::size_t>();
  m.n_classes = j.at("n_classes").get<std::size_t>();
  m.learning_rate = j.at("learning_rate").get<double>();
  for (const json& r : j.at("rounds")) {
    std::vector<Tree> round;
    for (const json& t : r) round.push_back(tree_from_json(t));
    if (round.size() != m.n_classes) throw ArtifactError("artifact: boosting round has wrong tree count");
    m.rounds.push_back(std::move(round));
  }
  return m;
}

inline json payload_of(const TrainedStack& s) {
  json layout = json::array();
  for (const Segment& seg : s.layout) layout.push_back({{"name", seg.name}, {"offset", seg.offset}, {"length", seg.length}});
  json encoder = json::object();
  for (std::size_t f = 0; f < kContextFields.size(); ++f) encoder[std::string(kContextFields[f])] = s.encoder.vocabularies()[f];
  json forest_trees = json::array();
  for (const Tree& t : s.forest.trees) forest_trees.push_back(node_to_json(t, 0));

  return json{
      {"format_version", s.format_version},
      {"n_classes", s.n_classes},
      {"class_names", s.class_names},
      {"fusion", {{"blocks", s.fusion.blocks}, {"embeddings", s.fusion.embeddings}}},
      {"layout", std::move(layout)},
      {"embedding_dims", s.embedding_dims},
      {"encoder", std::move(encoder)},
      {"scaler", {{"mean", s.scaler.mean()}, {"scale", s.scaler.scale()}}},
      {"forest", {{"n_features", s.forest.n_features}, {"n_classes", s.forest.n_classes}, {"trees", std::move(forest_trees)}}},
      {"boost", boost_to_json(s.boost)},
      {"linear",
       {{"n_features", s.linear.n_features},
        {"n_classes", s.linear.n_classes},
        {"weights", s.linear.weights},
        {"bias", s.linear.bias}}},
      {"meta", boost_to_json(s.meta)},
      {"temperature", s.temperature},
  };
}

inline TrainedStack stack_from_payload(const json& p) {
  TrainedStack s;
  s.format_version = p.at("format_version").get<int>();
  s.n_classes = p.at("n_classes").get<std::size_t>();
  s.class_names = p.at("class_names").get<std::vector<std::string>>();
  s.fusion.blocks = p.at("fusion").at("blocks").get<std::array<bool, 3>>();
  s.fusion.embeddings = p.at("fusion").at("embeddings").get<std::array<bool, 3>>();
  for (const json& seg : p.at("layout")) {
    s.layout.push_back({seg.at("name").get<std::string>(), seg.at("offset").get<std::size_t>(),
                        seg.at("length").get<std::size_t>()});
  }
  s.embedding_dims = p.at("embedding_dims").get<EmbeddingDims>();
  std::array<ContextEncoder::Vocabulary, 6> vocab;
  for (std::size_t f = 0; f < kContextFields.size(); ++f) {
    vocab[f] = p.at("encoder").at(std::string(kContextFields[f])).get<ContextEncoder::Vocabulary>();
  }
  s.encoder = ContextEncoder(std::move(vocab));
  s.scaler = Scaler(p.at("scaler").at("mean").get<std::vector<double>>(), p.at("scaler").at("scale").get<std::vector<double>>());

  const json& f = p.at("forest");
  s.forest.n_features = f.at("n_features").get<std::size_t>();
  s.forest.n_classes = f.at("n_classes").get<std::size_t>();
  for (const json& t : f.at("trees")) s.forest.trees.push_back(tree_from_json(t));
  s.boost = boost_from_json(p.at("boost"));
  const json& l = p.at("linear");
  s.linear.n_features = l.at("n_features").get<std::size_t>();
  s.linear.n_classes = l.at("n_classes").get<std::size_t>();
  s.linear.weights = l.at("weights").get<std::vector<std::vector<double>>>();
  s.linear.bias = l.at("bias").get<std::vector<double>>();
  s.meta = boost_from_json(p.at("meta"));
  s.temperature = p.at("temperature").get<double>();

  const std::size_t width = s.feature_width();
  if (s.scaler.width() != width || s.forest.n_features != width || s.boost.n_features != width ||
      s.linear.n_features != width) {
    throw ArtifactError("artifact: base model width does not match the fusion layout");
  }
  if (s.meta.n_features != kNumBaseLearners * s.n_classes) throw ArtifactError("artifact: meta model width is not 3 x K");
  return s;
}

}  // namespace detail

inline std::string canonical_payload(const TrainedStack& model) { return detail::payload_of(model).dump(); }

inline nlohmann::json artifact_envelope(const TrainedStack& model, const std::string& created = utc_timestamp()) {
  nlohmann::json payload = detail::payload_of(model);
  const std::string checksum = sha256_hex(payload.dump());
  return {{"format", kArtifactFormat},
          {"version", kStackFormatVersion},
          {"created", created},
          {"checksum", checksum},
          {"payload", std::move(payload)}};
}

inline void save_stack(const std::filesystem::path& path, const TrainedStack& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model artifact: " + path.string());
  out << artifact_envelope(model).dump() << '\n';
  if (!out) throw IoError("failed writing model artifact: " + path.string());
}

inline TrainedStack parse_stack(const std::string& text) {
  nlohmann::json env;
  try {
    env = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw ArtifactError("artifact checksum failure: file is truncated or not valid JSON");
  }
  if (!env.is_object() || env.value("format", "") != kArtifactFormat) throw ArtifactError("artifact: not an ethics-stack file");
  const auto version = env.find("version");
  if (version == env.end() || !version->is_number_integer() || version->get<int>() != kStackFormatVersion) {
    const std::string found = version == env.end() ? "missing" : version->dump();
    throw ArtifactError("artifact version mismatch: file has version " + found + ", this build reads version " +
                        std::to_string(kStackFormatVersion));
  }
  const auto payload = env.find("payload");
  const auto checksum = env.find("checksum");
  if (payload == env.end() || checksum == env.end() || !checksum->is_string() ||
      sha256_hex(payload->dump()) != checksum->get<std::string>()) {
    throw ArtifactError("artifact checksum failure: payload digest does not match");
  }
  try {
    return detail::stack_from_payload(*payload);
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(std::string("artifact: malformed payload: ") + e.what());
  }
}

inline TrainedStack load_stack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model artifact: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_stack(buf.str());
}

}  // namespace pluralism
