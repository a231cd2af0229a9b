#include "cavkit/harness/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cavkit/error.hpp"
#include "cavkit/linalg.hpp"

namespace cavkit::harness {
namespace {

[[noreturn]] void invalid(const std::string& what) { fail(ErrorCode::ConfigInvalid, what); }

template <typename T>
T scalar(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    invalid("bad value for '" + key + "'");
  }
}

void reject_unknown(const YAML::Node& node, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& entry : node) {
    const auto key = entry.first.as<std::string>();
    if (allowed.count(key) == 0) invalid("unknown key '" + key + "' in " + where);
  }
}

Vector vector_of(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) invalid("'" + key + "' must be a list");
  Vector out;
  for (const auto& v : node) out.push_back(scalar<double>(v, key));
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

SyntheticSpec synthetic_from(const YAML::Node& node) {
  if (!node.IsMap()) invalid("'synthetic' must be a mapping");
  reject_unknown(node,
                 {"d", "n_per_side", "concepts", "pairwise_cosine", "directions", "task_dir", "beta",
                  "noise_sigma", "base_sigma", "base_orthogonal", "confound_class", "split", "seed"},
                 "synthetic");
  SyntheticSpec spec;
  if (node["d"]) spec.d = scalar<std::size_t>(node["d"], "d");
  if (node["n_per_side"]) spec.n_per_side = scalar<std::size_t>(node["n_per_side"], "n_per_side");
  if (node["beta"]) spec.beta = scalar<double>(node["beta"], "beta");
  if (node["noise_sigma"]) spec.noise_sigma = scalar<double>(node["noise_sigma"], "noise_sigma");
  if (node["base_sigma"]) spec.base_sigma = scalar<double>(node["base_sigma"], "base_sigma");
  if (node["base_orthogonal"]) {
    spec.base_orthogonal = scalar<bool>(node["base_orthogonal"], "base_orthogonal");
  }
  if (node["confound_class"]) {
    spec.confound_class = scalar<int>(node["confound_class"], "confound_class");
  }
  if (node["seed"]) spec.seed = scalar<std::uint64_t>(node["seed"], "seed");
  if (node["split"]) {
    const Vector f = vector_of(node["split"], "split");
    if (f.size() != 3) invalid("'split' needs three fractions (train, val, test)");
    spec.split_fractions = {f[0], f[1], f[2]};
  }

  std::vector<std::string> names;
  std::size_t count = 1;
  if (const auto c = node["concepts"]) {
    if (c.IsSequence()) {
      for (const auto& n : c) names.push_back(scalar<std::string>(n, "concepts"));
      count = names.size();
    } else {
      count = scalar<std::size_t>(c, "concepts");
    }
  }
  try {
    if (const auto dirs = node["directions"]) {
      if (!dirs.IsSequence()) invalid("'directions' must be a list of vectors");
      for (const auto& v : dirs) spec.concept_dirs.push_back(normalize(vector_of(v, "directions")).vector());
      if (!node["task_dir"]) invalid("'task_dir' is required with explicit directions");
      spec.task_dir = normalize(vector_of(node["task_dir"], "task_dir")).vector();
      if (names.empty()) {
        for (std::size_t i = 0; i < spec.concept_dirs.size(); ++i) names.push_back("concept_" + std::to_string(i));
      }
      spec.concept_names = names;
    } else {
      const double rho = node["pairwise_cosine"] ? scalar<double>(node["pairwise_cosine"], "pairwise_cosine") : 0.0;
      plant_random_directions(spec, count, rho);
      if (!names.empty()) spec.concept_names = names;
    }
    spec.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigInvalid) throw;
    invalid(std::string("synthetic: ") + e.what());
  }
  return spec;
}

YAML::Node load_yaml(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    invalid(std::string("YAML parse error: ") + e.what());
  }
}

}  // namespace

bool BenchmarkConfig::wants(std::string_view metric) const {
  return std::find(metrics.begin(), metrics.end(), metric) != metrics.end();
}

bool BenchmarkConfig::needs_sae() const {
  return std::any_of(methods.begin(), methods.end(), cav::uses_sae);
}

void BenchmarkConfig::validate() const {
  if (synthetic.has_value() == !embeddings_path.empty()) {
    invalid("give either 'synthetic' or 'embeddings' + 'labels'");
  }
  if (!synthetic && labels_path.empty()) invalid("'labels' is required with 'embeddings'");
  if (methods.empty()) invalid("'methods' must list at least one method");
  if (seeds.empty()) invalid("'seeds' must not be empty");
  if (n_per_side == 0) invalid("'n_per_side' must be >= 1");
  if (steering != "orthogonalize") invalid("only 'orthogonalize' steering is benchmarked");
  for (const auto& m : metrics) {
    if (std::find(kAllMetrics.begin(), kAllMetrics.end(), m) == kAllMetrics.end()) {
      invalid("unknown metric '" + m + "'");
    }
  }
  if ((wants("cd") || wants("sd")) && target_task.empty()) invalid("CD/SD need a 'target_task'");
  if (needs_sae() && sae_dir.empty() && !sae_training) {
    invalid("SAE methods need 'sae_dir' or an 'sae' training block");
  }
  if (sampling == SamplingStrategy::stratified && group_key.empty()) {
    invalid("stratified sampling needs 'group_key'");
  }
  if (output_dir.empty()) invalid("'output_dir' must not be empty");
}

BenchmarkConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir) {
  const YAML::Node root = load_yaml(yaml_text);
  if (!root.IsMap()) invalid("config must be a mapping");
  reject_unknown(root,
                 {"embeddings", "labels", "synthetic", "concepts", "target_task", "methods",
                  "n_per_side", "seeds", "sampling", "group_key", "sae_dir", "sae", "steering",
                  "metrics", "output_dir", "vector_split", "auc_ties", "standardize", "center_pca"},
                 "config");
  BenchmarkConfig c;
  c.source_text = yaml_text;
  if (root["embeddings"]) c.embeddings_path = resolve(base_dir, scalar<std::string>(root["embeddings"], "embeddings"));
  if (root["labels"]) c.labels_path = resolve(base_dir, scalar<std::string>(root["labels"], "labels"));
  if (root["synthetic"]) c.synthetic = synthetic_from(root["synthetic"]);
  if (const auto n = root["concepts"]) {
    if (!n.IsSequence()) invalid("'concepts' must be a list");
    for (const auto& v : n) c.concepts.push_back(scalar<std::string>(v, "concepts"));
  }
  if (root["target_task"]) c.target_task = scalar<std::string>(root["target_task"], "target_task");
  if (const auto n = root["methods"]) {
    if (!n.IsSequence()) invalid("'methods' must be a list");
    for (const auto& v : n) {
      const auto name = scalar<std::string>(v, "methods");
      const auto id = cav::parse_method(name);
      if (!id) invalid("unknown method '" + name + "'");
      c.methods.push_back(*id);
    }
  }
  if (root["n_per_side"]) c.n_per_side = scalar<std::size_t>(root["n_per_side"], "n_per_side");
  if (const auto n = root["seeds"]) {
    if (!n.IsSequence()) invalid("'seeds' must be a list");
    c.seeds.clear();
    for (const auto& v : n) c.seeds.push_back(scalar<std::uint64_t>(v, "seeds"));
  }
  if (root["sampling"]) {
    const auto s = scalar<std::string>(root["sampling"], "sampling");
    if (s == "random") {
      c.sampling = SamplingStrategy::random_balanced;
    } else if (s == "paired") {
      c.sampling = SamplingStrategy::paired_counterfactual;
    } else if (s == "stratified") {
      c.sampling = SamplingStrategy::stratified;
    } else if (s != "auto") {
      invalid("'sampling' must be auto, random, paired or stratified");
    }
  }
  if (root["group_key"]) c.group_key = scalar<std::string>(root["group_key"], "group_key");
  if (root["sae_dir"]) c.sae_dir = resolve(base_dir, scalar<std::string>(root["sae_dir"], "sae_dir"));
  if (const auto n = root["sae"]) {
    if (!n.IsMap()) invalid("'sae' must be a mapping");
    reject_unknown(n, {"m", "k", "epochs", "lr", "seed"}, "sae");
    SaeTraining t;
    if (n["m"]) t.m = scalar<std::size_t>(n["m"], "m");
    if (n["k"]) t.k = scalar<std::size_t>(n["k"], "k");
    if (n["epochs"]) t.epochs = scalar<std::size_t>(n["epochs"], "epochs");
    if (n["lr"]) t.learning_rate = scalar<double>(n["lr"], "lr");
    if (n["seed"]) t.seed = scalar<std::uint64_t>(n["seed"], "seed");
    if (t.k < 1 || t.k > t.m) invalid("sae: k must be in [1, m]");
    c.sae_training = t;
  }
  if (root["steering"]) c.steering = scalar<std::string>(root["steering"], "steering");
  if (const auto n = root["metrics"]) {
    if (!n.IsSequence()) invalid("'metrics' must be a list");
    c.metrics.clear();
    for (const auto& v : n) c.metrics.push_back(scalar<std::string>(v, "metrics"));
  }
  if (root["output_dir"]) c.output_dir = resolve(base_dir, scalar<std::string>(root["output_dir"], "output_dir"));
  if (root["vector_split"]) {
    const auto s = parse_split(scalar<std::string>(root["vector_split"], "vector_split"));
    if (!s || *s == Split::train) invalid("'vector_split' must be val or test");
    c.vector_split = *s;
  }
  if (root["auc_ties"]) {
    const auto s = scalar<std::string>(root["auc_ties"], "auc_ties");
    if (s == "half") {
      c.auc_ties = metrics::TieRule::half;
    } else if (s == "strict") {
      c.auc_ties = metrics::TieRule::strict;
    } else {
      invalid("'auc_ties' must be half or strict");
    }
  }
  if (root["standardize"]) c.standardize = scalar<bool>(root["standardize"], "standardize");
  if (root["center_pca"]) c.center_pca = scalar<bool>(root["center_pca"], "center_pca");
  c.validate();
  return c;
}

BenchmarkConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

SyntheticSpec parse_synthetic_spec(const std::string& yaml_text) {
  const YAML::Node root = load_yaml(yaml_text);
  if (root.IsMap() && root["synthetic"]) return synthetic_from(root["synthetic"]);
  return synthetic_from(root);
}

std::string config_hash(const BenchmarkConfig& config, const std::vector<std::uint64_t>& seeds) {
  std::string text = config.source_text;
  text += "\nseeds:";
  for (auto s : seeds) text += ' ' + std::to_string(s);
  const std::uint64_t h = hash_name(text);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cavkit::harness
