#include <doctest.h>

#include <cmath>

#include "ats/config.hpp"
#include "support.hpp"

using namespace ats;

namespace {

const char* kListing = R"(task: regression

profiler:
  type: TransformerRegressor
  params:
    trainer:
      gpus: 1
      max_epochs: 30
    network:
      output_normalized: true
      pretrained_model_name_or_path:
        bert-base-uncased
      lr: 4e-5
    data_loader:
      batch_size: 8

dataset:
  type: asap-aes
  params:
    path:
      /path/to/training_tsv_file
)";

const ConfigNode& at(const ConfigNode& n, std::initializer_list<const char*> path) {
  const ConfigNode* cur = &n;
  for (const char* key : path) {
    cur = cur->find(key);
    REQUIRE(cur != nullptr);
  }
  return *cur;
}

template <typename T>
T scalar_as(const ConfigNode& n) {
  REQUIRE(std::holds_alternative<T>(n.scalar()));
  return std::get<T>(n.scalar());
}

struct Failure {
  std::string code;
  int line = 0;
  std::string message;
};

Failure parse_failure(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return {e.code(), e.line(), e.message()};
  }
  return {};
}

Failure bind_failure(const std::string& text) {
  try {
    bind_experiment(parse_config(text));
  } catch (const Error& e) {
    return {e.code(), 0, e.message()};
  }
  return {};
}

const char* kMinimal = R"(task: classification
profiler:
  type: FeatureClassifier
dataset:
  type: tsv
  params:
    path: train.tsv
)";

}  // namespace

TEST_CASE("golden: the published example config parses to the documented tree") {
  const auto root = parse_config(kListing);
  REQUIRE(root.is_mapping());
  REQUIRE(root.entries().size() == 3);
  CHECK(root.entries()[0].first == "task");
  CHECK(root.entries()[1].first == "profiler");
  CHECK(root.entries()[2].first == "dataset");
  CHECK(scalar_as<std::string>(at(root, {"task"})) == "regression");
  CHECK(scalar_as<std::string>(at(root, {"profiler", "type"})) == "TransformerRegressor");
  CHECK(scalar_as<std::int64_t>(at(root, {"profiler", "params", "trainer", "gpus"})) == 1);
  CHECK(scalar_as<std::int64_t>(at(root, {"profiler", "params", "trainer", "max_epochs"})) == 30);
  CHECK(scalar_as<bool>(at(root, {"profiler", "params", "network", "output_normalized"})) == true);
  CHECK(scalar_as<std::string>(at(root, {"profiler", "params", "network", "pretrained_model_name_or_path"})) ==
        "bert-base-uncased");
  CHECK(scalar_as<double>(at(root, {"profiler", "params", "network", "lr"})) == 4e-5);
  CHECK(scalar_as<std::int64_t>(at(root, {"profiler", "params", "data_loader", "batch_size"})) == 8);
  CHECK(scalar_as<std::string>(at(root, {"dataset", "type"})) == "asap-aes");
  CHECK(scalar_as<std::string>(at(root, {"dataset", "params", "path"})) == "/path/to/training_tsv_file");
  CHECK(at(root, {"profiler", "params", "network", "lr"}).line() == 13);

  CHECK(serialize_config(root) == R"(task: regression
profiler:
  type: TransformerRegressor
  params:
    trainer:
      gpus: 1
      max_epochs: 30
    network:
      output_normalized: true
      pretrained_model_name_or_path: bert-base-uncased
      lr: 4e-05
    data_loader:
      batch_size: 8
dataset:
  type: asap-aes
  params:
    path: /path/to/training_tsv_file
)");
}

TEST_CASE("golden: binding the published example reports the transformer scope") {
  const auto f = bind_failure(kListing);
  CHECK(f.code == "UnknownType");
  CHECK(f.message.find("FeatureRegressor") != std::string::npos);
  CHECK(f.message.find("FeatureClassifier") != std::string::npos);
  CHECK(f.message.find("transformer-based profilers are out of scope") != std::string::npos);
}

TEST_CASE("basic nesting, sequences and scalars") {
  const auto n = parse_config("a:\n  b: 1\n");
  CHECK(scalar_as<std::int64_t>(at(n, {"a", "b"})) == 1);

  const auto s = parse_config(R"(# comment
items:
  - 1
  - two   # trailing comment
  - name: x
    weight: 0.5
  -
    nested: true
quoted: "a: b # c"
single: 'it''s'
empty:
tilde: ~
neg: -7
real: 1.5e3
inf: -.inf
plain: yes
)");
  const auto& items = at(s, {"items"}).items();
  REQUIRE(items.size() == 4);
  CHECK(scalar_as<std::int64_t>(items[0]) == 1);
  CHECK(scalar_as<std::string>(items[1]) == "two");
  CHECK(scalar_as<std::string>(*items[2].find("name")) == "x");
  CHECK(scalar_as<double>(*items[2].find("weight")) == 0.5);
  CHECK(scalar_as<bool>(*items[3].find("nested")) == true);
  CHECK(scalar_as<std::string>(at(s, {"quoted"})) == "a: b # c");
  CHECK(scalar_as<std::string>(at(s, {"single"})) == "it's");
  CHECK(at(s, {"empty"}).is_null());
  CHECK(at(s, {"tilde"}).is_null());
  CHECK(scalar_as<std::int64_t>(at(s, {"neg"})) == -7);
  CHECK(scalar_as<double>(at(s, {"real"})) == 1500.0);
  CHECK(scalar_as<double>(at(s, {"inf"})) == -INFINITY);
  CHECK(scalar_as<std::string>(at(s, {"plain"})) == "yes");
}

TEST_CASE("parse errors carry codes and lines") {
  auto f = parse_failure("a:\n\tb: 1\n");
  CHECK(f.code == "TabIndent");
  CHECK(f.line == 2);
  f = parse_failure("a:\n   b: 1\n");
  CHECK(f.code == "BadIndent");
  CHECK(f.line == 2);
  f = parse_failure("a:\n    b: 1\n");
  CHECK(f.code == "BadIndent");
  f = parse_failure("x: 1\na: 1\na: 2\n");
  CHECK(f.code == "DuplicateKey");
  CHECK(f.line == 3);
  CHECK(parse_failure("a: {b: 1}\n").code == "UnsupportedSyntax");
  CHECK(parse_failure("a: [1, 2]\n").code == "UnsupportedSyntax");
  CHECK(parse_failure("a: &anchor 1\n").code == "UnsupportedSyntax");
  CHECK(parse_failure("a: *alias\n").code == "UnsupportedSyntax");
  CHECK(parse_failure("a: !tag 1\n").code == "UnsupportedSyntax");
  CHECK(parse_failure("a: |\n  text\n").code == "UnsupportedSyntax");
  CHECK(parse_failure("---\na: 1\n").code == "UnsupportedSyntax");
  CHECK(parse_failure("a: \"open\n").code == "SyntaxError");
  CHECK(parse_failure("a: 1\n- 2\n").code != "");
}

namespace {

std::string random_string(ats_test::Gen& g) {
  static const std::vector<std::string> tricky = {
      "true", "null", "1", "-2.5", "4e-5", "a: b", "# hash", " lead", "trail ", "", "x'y", "q\"q", "tab\there",
      "line\nbreak", "- dash", "\xe4\xbd\xa0\xe5\xa5\xbd", "~", ".inf", "{", "[x]", "&a", "*b", "?", "|", ">", "%"};
  return g.coin() ? g.word() : tricky[static_cast<std::size_t>(g.integer(0, static_cast<int>(tricky.size()) - 1))];
}

ConfigNode random_node(ats_test::Gen& g, int depth) {
  const int pick = depth >= 3 ? 0 : g.integer(0, 2);
  if (pick == 1) {
    auto m = ConfigNode::make_mapping();
    const int n = g.integer(1, 4);
    for (int i = 0; i < n; ++i) {
      auto key = g.word(1, 6) + std::to_string(i);
      m.insert(std::move(key), random_node(g, depth + 1));
    }
    return m;
  }
  if (pick == 2) {
    auto s = ConfigNode::make_sequence();
    const int n = g.integer(1, 4);
    for (int i = 0; i < n; ++i) s.push_back(random_node(g, depth + 1));
    return s;
  }
  switch (g.integer(0, 4)) {
    case 0: return ConfigNode::make_scalar(Null{});
    case 1: return ConfigNode::make_scalar(g.coin());
    case 2: return ConfigNode::make_scalar(static_cast<std::int64_t>(g.integer(-100000, 100000)));
    case 3: return ConfigNode::make_scalar(g.real(-1e6, 1e6) * std::pow(10.0, g.integer(-30, 30)));
    default: return ConfigNode::make_scalar(random_string(g));
  }
}

}  // namespace

TEST_CASE("property: parse(serialize(node)) == node") {
  ats_test::Gen g(61);
  for (int trial = 0; trial < 500; ++trial) {
    auto root = ConfigNode::make_mapping();
    const int n = g.integer(1, 5);
    for (int i = 0; i < n; ++i) root.insert("k" + std::to_string(i), random_node(g, 0));
    const auto text = serialize_config(root);
    ConfigNode back;
    try {
      back = parse_config(text);
    } catch (const Error& e) {
      FAIL_CHECK(e.what() << "\n" << text);
      continue;
    }
    if (!(back == root)) FAIL_CHECK("round trip changed the tree:\n" << text);
    REQUIRE(serialize_config(back) == text);
  }
}

TEST_CASE("property: parsing is total") {
  ats_test::Gen g(62);
  const std::vector<std::string> pieces = {"a", ":", " ", "  ", "\t", "\n", "-", "#", "\"", "'", "{", "[", "1",
                                           "x: y", "\\", "e", ".", "&", "---", "\xc3"};
  for (int trial = 0; trial < 3000; ++trial) {
    std::string text;
    const int n = g.integer(0, 30);
    for (int i = 0; i < n; ++i) text += pieces[static_cast<std::size_t>(g.integer(0, static_cast<int>(pieces.size()) - 1))];
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      REQUIRE(e.line() >= 1);
    } catch (const std::exception& e) {
      FAIL("non-positioned failure: " << e.what() << " on input: " << text);
    }
  }
}

TEST_CASE("bind fills defaults") {
  const auto cfg = bind_experiment(parse_config(kMinimal));
  CHECK(cfg.task == TaskKind::classification);
  CHECK(cfg.profiler.type == "FeatureClassifier");
  CHECK(cfg.profiler.seed == 42);
  CHECK(cfg.profiler.learner.kind == LearnerKind::random_forest);
  CHECK(cfg.profiler.learner.forest.n_estimators == 100);
  CHECK(cfg.profiler.learner.forest.max_depth == 5);
  CHECK(cfg.profiler.learner.forest.mode == ForestMode::classification);
  CHECK_FALSE(cfg.profiler.standardize);
  REQUIRE(cfg.profiler.features.size() == 3);
  CHECK(cfg.profiler.features[0].kind == ExtractorKind::token_count);
  CHECK(cfg.profiler.features[1].kind == ExtractorKind::avg_token_length);
  CHECK(cfg.profiler.features[2].kind == ExtractorKind::unigram_likelihood);
  CHECK(cfg.profiler.tokenizer.kind == TokenizerKind::space_punct);
  CHECK(cfg.dataset.type == "tsv");
  CHECK(cfg.dataset.path == "train.tsv");
  CHECK_FALSE(cfg.dataset.train_ratio.has_value());
}

TEST_CASE("bind a full regression config") {
  const auto cfg = bind_experiment(parse_config(R"(task: regression
profiler:
  type: FeatureRegressor
  params:
    tokenizer:
      type: char
      lowercase: true
    features:
      - type: token_count
      - type: doc_embedding
        params:
          vectors_path: vec.txt
    learner:
      type: ridge
      params:
        lambda: 0.5
    output_normalized: true
    seed: 7
dataset:
  type: asap-aes
  params:
    path: data.tsv
    prompt_id: 3
    train_ratio: 0.8
    split_seed: 11
)"));
  CHECK(cfg.profiler.tokenizer.kind == TokenizerKind::char_level);
  CHECK(cfg.profiler.tokenizer.lowercase);
  CHECK(cfg.profiler.learner.kind == LearnerKind::ridge);
  CHECK(cfg.profiler.learner.lambda == 0.5);
  CHECK(cfg.profiler.standardize);
  CHECK(cfg.profiler.output_normalized);
  CHECK(cfg.profiler.seed == 7);
  CHECK(cfg.profiler.features[1].vectors_path == "vec.txt");
  CHECK(cfg.dataset.prompt_id == 3);
  CHECK(cfg.dataset.train_ratio == 0.8);
  CHECK(cfg.dataset.split_seed == 11);
}

TEST_CASE("bind errors") {
  CHECK(bind_failure("task: regression\nprofiler:\n  type: FeatureRegressor\n").code == "MissingSection");
  CHECK(bind_failure("task: regression\nprofiler:\n  type: FeatureRegressor\n").message.find("MissingSection(dataset)") !=
        std::string::npos);
  CHECK(bind_failure("profiler:\n  type: FeatureRegressor\ndataset:\n  type: tsv\n").message.find("(task)") !=
        std::string::npos);

  auto f = bind_failure(std::string(kMinimal) + "extra: 1\n");
  CHECK(f.code == "BadParam");

  f = bind_failure(R"(task: classification
profiler:
  type: FeatureClassifier
  params:
    learner:
      type: random_forest
      params:
        n_estimators: many
dataset:
  type: tsv
  params:
    path: train.tsv
)");
  CHECK(f.code == "BadParam");
  CHECK(f.message.find("profiler.params.learner.params.n_estimators") != std::string::npos);
  CHECK(f.message.find("line 8") != std::string::npos);

  f = bind_failure(R"(task: regression
profiler:
  type: FeatureRegressor
  params:
    learner:
      type: logistic
dataset:
  type: tsv
  params:
    path: t.tsv
)");
  CHECK(f.code == "TaskModelMismatch");

  f = bind_failure("task: regression\nprofiler:\n  type: FeatureClassifier\ndataset:\n  type: tsv\n  params:\n    path: x\n");
  CHECK(f.code == "TaskModelMismatch");

  f = bind_failure("task: regression\nprofiler:\n  type: FeatureRegressor\ndataset:\n  type: csv\n  params:\n    path: x\n");
  CHECK(f.code == "UnknownType");
  CHECK(f.message.find("asap-aes") != std::string::npos);

  f = bind_failure(R"(task: classification
profiler:
  type: FeatureClassifier
  params:
    features:
      - type: syntax_tree
dataset:
  type: tsv
  params:
    path: t.tsv
)");
  CHECK(f.code == "UnknownType");
  CHECK(f.message.find("unigram_likelihood") != std::string::npos);

  f = bind_failure(R"(task: classification
profiler:
  type: FeatureClassifier
  params:
    output_normalized: true
dataset:
  type: tsv
  params:
    path: t.tsv
)");
  CHECK(f.code == "BadParam");

  f = bind_failure("task: regression\nprofiler:\n  type: FeatureRegressor\ndataset:\n  type: asap-aes\n  params:\n    path: x\n");
  CHECK(f.code == "BadParam");
  CHECK(f.message.find("prompt_id") != std::string::npos);
}

TEST_CASE("task/learner compatibility") {
  CHECK_NOTHROW(check_task_learner(TaskKind::regression, LearnerKind::ridge));
  CHECK_NOTHROW(check_task_learner(TaskKind::regression, LearnerKind::random_forest));
  CHECK_NOTHROW(check_task_learner(TaskKind::classification, LearnerKind::logistic));
  CHECK_THROWS_AS(check_task_learner(TaskKind::classification, LearnerKind::ridge), Error);
}

TEST_CASE("load_experiment resolves paths next to the file") {
  ats_test::TempDir dir;
  ats_test::write_file(dir / "exp.yaml", kMinimal);
  const auto cfg = load_experiment(dir / "exp.yaml");
  CHECK(cfg.resolve(cfg.dataset.path) == dir / "train.tsv");
  CHECK(cfg.resolve("/abs/path") == "/abs/path");
  CHECK(cfg.source_text == kMinimal);
  try {
    load_experiment(dir / "missing.yaml");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "FileNotFound");
    CHECK(std::string(e.what()).find("missing.yaml") != std::string::npos);
  }
}
