#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ats/error.hpp"
#include "ats/features.hpp"
#include "ats/learners.hpp"
#include "ats/lingproc.hpp"
#include "ats/types.hpp"

namespace ats {

// Parse failure positioned at a 1-based line.
class ConfigError : public Error {
 public:
  ConfigError(std::string code, int line, const std::string& message)
      : Error(std::move(code), "line " + std::to_string(line) + ": " + message), line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

struct Null {
  friend bool operator==(Null, Null) { return true; }
};

using Scalar = std::variant<Null, bool, std::int64_t, double, std::string>;

class ConfigNode {
 public:
  enum class Kind { mapping, sequence, scalar };
  using Entry = std::pair<std::string, ConfigNode>;

  ConfigNode() = default;
  static ConfigNode make_mapping();
  static ConfigNode make_sequence();
  static ConfigNode make_scalar(Scalar value);

  Kind kind() const { return kind_; }
  bool is_mapping() const { return kind_ == Kind::mapping; }
  bool is_sequence() const { return kind_ == Kind::sequence; }
  bool is_scalar() const { return kind_ == Kind::scalar; }
  bool is_null() const { return is_scalar() && std::holds_alternative<Null>(scalar_); }

  // Mapping access, in file order.
  const std::vector<Entry>& entries() const { return entries_; }
  const ConfigNode* find(std::string_view key) const;
  // Throws DuplicateKey if the key already exists.
  ConfigNode& insert(std::string key, ConfigNode value);

  const std::vector<ConfigNode>& items() const { return items_; }
  void push_back(ConfigNode value) { items_.push_back(std::move(value)); }

  const Scalar& scalar() const { return scalar_; }

  int line() const { return line_; }
  void set_line(int line) { line_ = line; }

  friend bool operator==(const ConfigNode& a, const ConfigNode& b);

 private:
  Kind kind_ = Kind::scalar;
  std::vector<Entry> entries_;
  std::vector<ConfigNode> items_;
  Scalar scalar_ = Null{};
  int line_ = 0;
};

// Block-style YAML subset: mappings, `- ` sequences, typed scalars, `#`
// comments, quoted strings and 2-space indentation steps. Flow collections,
// anchors, aliases, tags, block scalars and document markers raise
// UnsupportedSyntax.
ConfigNode parse_config(std::string_view text);

// Canonical block serialization; parse_config(serialize_config(n)) == n for
// trees without empty collections.
std::string serialize_config(const ConfigNode& node);

enum class LearnerKind { ridge, logistic, random_forest };

std::string_view to_string(LearnerKind kind);

struct FeatureConfig {
  ExtractorKind kind = ExtractorKind::token_count;
  std::optional<std::string> table_path;    // unigram_likelihood
  std::optional<std::string> vectors_path;  // doc_embedding
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::random_forest;
  double lambda = 1.0;
  LogisticHyper logistic;
  ForestConfig forest;
};

struct ProfilerConfig {
  std::string type;
  ConfigNode params;
  Tokenizer tokenizer;
  std::vector<FeatureConfig> features;
  LearnerConfig learner;
  bool standardize = false;
  std::uint64_t seed = 42;
  bool output_normalized = false;
};

struct DatasetConfig {
  std::string type;
  ConfigNode params;
  std::string path;
  int prompt_id = 0;
  std::optional<LabelSpec> label_spec;
  std::vector<std::string> label_names;
  std::optional<double> train_ratio;
  std::uint64_t split_seed = 42;
};

struct ExperimentConfig {
  TaskKind task = TaskKind::regression;
  ProfilerConfig profiler;
  DatasetConfig dataset;
  // Relative resource paths resolve against this directory.
  std::filesystem::path base_dir;
  // Verbatim configuration text, stored in artifacts.
  std::string source_text;

  std::filesystem::path resolve(const std::string& path) const;
};

inline const std::vector<std::string>& profiler_types() {
  static const std::vector<std::string> types = {"FeatureRegressor", "FeatureClassifier"};
  return types;
}

inline const std::vector<std::string>& dataset_types() {
  static const std::vector<std::string> types = {"tsv", "asap-aes"};
  return types;
}

// Validates the three sections, registered type names and parameter types,
// and fills defaults. Throws MissingSection, UnknownType, BadParam or
// TaskModelMismatch.
ExperimentConfig bind_experiment(const ConfigNode& root);

// Reads, parses and binds a configuration file.
ExperimentConfig load_experiment(const std::filesystem::path& path);

// The learner must suit the task: regression takes ridge or random_forest,
// classification takes logistic or random_forest.
void check_task_learner(TaskKind task, LearnerKind learner);

}  // namespace ats
