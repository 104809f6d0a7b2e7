#include "ats/profiler.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "ats/dataset_io.hpp"
#include "ats/error.hpp"

namespace ats {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Re-raises an error with the config path that produced it.
[[noreturn]] void rethrow_with(const std::string& where, const Error& e) { throw Error(e.code(), where + ": " + e.message()); }

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("IoError", "cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("IoError", "failed writing '" + path.string() + "'");
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json manifest_core(const json& files) { return {{"format_version", kArtifactFormatVersion}, {"files", files}}; }

std::size_t model_dims(const Model& model) {
  return std::visit(Overloaded{[](const LinearModel& m) { return m.weights.size(); },
                               [](const LogisticModel& m) { return m.weights.cols(); },
                               [](const Forest& f) { return f.num_features; }},
                    model);
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("IoError", "SHA-256 computation failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

Profiler::Profiler(TaskKind task, FeaturePipeline pipeline, Model model, LabelSpec spec, bool output_normalized,
                   std::string config_text)
    : task_(task),
      pipeline_(std::move(pipeline)),
      model_(std::move(model)),
      spec_(spec),
      output_normalized_(output_normalized),
      config_text_(std::move(config_text)) {
  if (model_dims(model_) != pipeline_.dims()) {
    throw Error("DimMismatch", "model expects " + std::to_string(model_dims(model_)) + " features, pipeline gives " +
                                   std::to_string(pipeline_.dims()));
  }
  const bool regression_model =
      std::holds_alternative<LinearModel>(model_) ||
      (std::holds_alternative<Forest>(model_) && std::get<Forest>(model_).config.mode == ForestMode::regression);
  if (regression_model != (task_ == TaskKind::regression)) {
    throw Error("TaskModelMismatch", "model kind does not match task '" + std::string(to_string(task_)) + "'");
  }
  if (task_ == TaskKind::classification) {
    const auto classes = std::visit(Overloaded{[](const LogisticModel& m) { return static_cast<int>(m.classes()); },
                                               [](const Forest& f) { return f.config.num_classes; },
                                               [](const LinearModel&) { return 0; }},
                                    model_);
    if (classes != spec_.size()) throw Error("DimMismatch", "classifier class count differs from the label range");
  }
  if (output_normalized_ && task_ != TaskKind::regression) {
    throw Error("BadParam", "output normalization only applies to regression");
  }
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  const auto& dc = cfg.dataset;
  try {
    if (dc.type == "asap-aes") {
      auto ranges = default_asap_ranges();
      if (dc.label_spec) ranges.insert_or_assign(dc.prompt_id, *dc.label_spec);
      return read_asap(cfg.resolve(dc.path), dc.prompt_id, ranges);
    }
    TsvOptions options;
    options.label_spec = dc.label_spec;
    options.label_names = dc.label_names;
    return read_tsv(cfg.resolve(dc.path), options);
  } catch (const Error& e) {
    rethrow_with("dataset.params.path (" + cfg.resolve(dc.path).string() + ")", e);
  }
}

Dataset training_dataset(const ExperimentConfig& cfg) {
  Dataset ds = load_dataset(cfg);
  if (!cfg.dataset.train_ratio) return ds;
  return split(ds, *cfg.dataset.train_ratio, cfg.dataset.split_seed).first;
}

Profiler Profiler::train(const ExperimentConfig& cfg) { return train(cfg, training_dataset(cfg)); }

Profiler Profiler::train(const ExperimentConfig& cfg, const Dataset& training) {
  const auto& pc = cfg.profiler;
  check_task_learner(cfg.task, pc.learner.kind);
  if (training.empty()) throw Error("EmptyTrainingSet", "training set '" + training.name + "' is empty");

  std::vector<std::string> texts;
  std::vector<int> labels;
  texts.reserve(training.size());
  for (const auto& inst : training.instances) {
    if (!inst.label) throw Error("BadLabel", "training instance '" + inst.id + "' has no label");
    texts.push_back(inst.text);
    labels.push_back(*inst.label);
  }

  std::vector<Extractor> extractors;
  for (std::size_t i = 0; i < pc.features.size(); ++i) {
    const auto& fc = pc.features[i];
    const std::string where = "profiler.params.features[" + std::to_string(i) + "]";
    try {
      switch (fc.kind) {
        case ExtractorKind::token_count: extractors.push_back(Extractor::token_count()); break;
        case ExtractorKind::avg_token_length: extractors.push_back(Extractor::avg_token_length()); break;
        case ExtractorKind::unigram_likelihood: {
          auto table = fc.table_path
                           ? std::make_shared<const UnigramTable>(UnigramTable::load(cfg.resolve(*fc.table_path)))
                           : std::make_shared<const UnigramTable>(build_unigram_table(texts, pc.tokenizer));
          extractors.push_back(Extractor::unigram_likelihood(std::move(table)));
          break;
        }
        case ExtractorKind::doc_embedding:
          extractors.push_back(Extractor::doc_embedding(
              std::make_shared<const VectorTable>(load_word_vectors(cfg.resolve(*fc.vectors_path)))));
          break;
      }
    } catch (const Error& e) {
      rethrow_with(where, e);
    }
  }
  FeaturePipeline pipeline(pc.tokenizer, std::move(extractors));

  Matrix x = pipeline.raw_matrix(texts);
  Standardizer stats = fit_standardizer(x);
  pipeline.set_train_means(stats.means);
  if (pc.standardize) {
    for (std::size_t i = 0; i < x.rows(); ++i) stats.apply(x.row(i));
    pipeline.set_standardizer(std::move(stats));
  }

  const LabelSpec& spec = training.label_spec;
  Model model = LinearModel{};
  try {
    if (cfg.task == TaskKind::regression) {
      std::vector<double> targets;
      targets.reserve(labels.size());
      for (int label : labels) {
        const double score = label_to_score(label, spec);
        targets.push_back(pc.output_normalized ? normalize_score(score, spec) : score);
      }
      if (pc.learner.kind == LearnerKind::ridge) {
        model = ridge_fit(x, targets, pc.learner.lambda);
      } else {
        model = forest_fit(x, targets, pc.learner.forest);
      }
    } else {
      std::vector<int> classes;
      classes.reserve(labels.size());
      for (int label : labels) classes.push_back(label - spec.lo());
      if (pc.learner.kind == LearnerKind::logistic) {
        model = logistic_fit(x, classes, spec.size(), pc.learner.logistic);
      } else {
        ForestConfig fcfg = pc.learner.forest;
        fcfg.num_classes = spec.size();
        std::vector<double> targets(classes.begin(), classes.end());
        model = forest_fit(x, targets, fcfg);
      }
    }
  } catch (const Error& e) {
    rethrow_with("profiler.params.learner", e);
  }

  std::string config_text = cfg.source_text;
  if (config_text.empty()) {
    ConfigNode root = ConfigNode::make_mapping();
    root.insert("task", ConfigNode::make_scalar(std::string(to_string(cfg.task))));
    ConfigNode profiler = ConfigNode::make_mapping();
    profiler.insert("type", ConfigNode::make_scalar(pc.type));
    profiler.insert("params", pc.params);
    root.insert("profiler", std::move(profiler));
    ConfigNode dataset = ConfigNode::make_mapping();
    dataset.insert("type", ConfigNode::make_scalar(cfg.dataset.type));
    dataset.insert("params", cfg.dataset.params);
    root.insert("dataset", std::move(dataset));
    config_text = serialize_config(root);
  }
  return Profiler(cfg.task, std::move(pipeline), std::move(model), spec, pc.output_normalized, std::move(config_text));
}

Prediction Profiler::predict(std::string_view text) const { return predict_tokens(pipeline_.tokenizer()(text)); }

Prediction Profiler::predict_tokens(const TokenList& tokens) const {
  return predict_raw_features(pipeline_.raw_features(tokens));
}

Prediction Profiler::predict_raw_features(std::vector<double> x) const {
  if (pipeline_.standardizer()) pipeline_.standardizer()->apply(x);
  Prediction p;
  if (task_ == TaskKind::regression) {
    const double raw = std::holds_alternative<LinearModel>(model_) ? ridge_predict(std::get<LinearModel>(model_), x)
                                                                  : forest_predict(std::get<Forest>(model_), x);
    p.score = output_normalized_ ? denormalize_score(raw, spec_) : raw;
    p.label = score_to_label(p.score, spec_);
    return p;
  }
  auto probs = std::holds_alternative<LogisticModel>(model_)
                   ? logistic_predict_proba(std::get<LogisticModel>(model_), x)
                   : forest_predict_proba(std::get<Forest>(model_), x);
  p.label = spec_.lo() + argmax(probs);
  p.score = label_to_score(p.label, spec_);
  p.probs = std::move(probs);
  return p;
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

void Profiler::save(const fs::path& dir) const {
  fs::create_directories(dir / "resources");

  json extractors = json::array();
  std::map<std::string, std::string> files;
  files["config.yaml"] = config_text_;
  const auto& exs = pipeline_.extractors();
  for (std::size_t i = 0; i < exs.size(); ++i) {
    json ej = {{"type", to_string(exs[i].kind)}};
    if (exs[i].kind == ExtractorKind::unigram_likelihood) {
      const std::string rel = "resources/unigram_" + std::to_string(i) + ".tsv";
      files[rel] = exs[i].unigram->to_tsv();
      ej["resource"] = rel;
    } else if (exs[i].kind == ExtractorKind::doc_embedding) {
      const std::string rel = "resources/vectors_" + std::to_string(i) + ".txt";
      files[rel] = exs[i].vectors->to_text();
      ej["resource"] = rel;
    }
    extractors.push_back(std::move(ej));
  }

  json pipeline = {
      {"task", to_string(task_)},
      {"label_spec", {{"lo", spec_.lo()}, {"hi", spec_.hi()}}},
      {"output_normalized", output_normalized_},
      {"tokenizer", {{"type", to_string(pipeline_.tokenizer().kind)}, {"lowercase", pipeline_.tokenizer().lowercase}}},
      {"extractors", std::move(extractors)},
      {"feature_names", pipeline_.feature_names()},
      {"train_means", pipeline_.train_means()},
      {"standardizer", nullptr},
  };
  if (const auto& s = pipeline_.standardizer()) pipeline["standardizer"] = {{"means", s->means}, {"stds", s->stds}};
  files["pipeline.json"] = pipeline.dump(2) + "\n";
  files["model.json"] = std::visit([](const auto& m) { return to_json(m); }, model_).dump() + "\n";

  json hashes = json::object();
  for (const auto& [rel, content] : files) {
    write_file(dir / rel, content);
    hashes[rel] = sha256_hex(content);
  }
  json manifest = manifest_core(hashes);
  manifest["digest"] = sha256_hex(manifest_core(hashes).dump());
  manifest["created_at"] = utc_timestamp();
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Profiler Profiler::load(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw Error("CorruptArtifact", "manifest.json is not valid JSON: " + std::string(e.what()));
  } catch (const Error& e) {
    throw Error("CorruptArtifact", "no manifest.json in '" + dir.string() + "'");
  }
  if (!manifest.is_object() || !manifest.contains("format_version") || !manifest["format_version"].is_string()) {
    throw Error("CorruptArtifact", "manifest lacks a format_version");
  }
  const auto version = manifest["format_version"].get<std::string>();
  if (version != kArtifactFormatVersion) {
    throw Error("UnsupportedVersion", "artifact format version '" + version + "' (supported: " +
                                          std::string(kArtifactFormatVersion) + ")");
  }
  if (!manifest.contains("files") || !manifest["files"].is_object() || !manifest.contains("digest") ||
      manifest["digest"] != sha256_hex(manifest_core(manifest["files"]).dump())) {
    throw Error("CorruptArtifact", "manifest digest does not match its contents");
  }

  std::map<std::string, std::string> files;
  for (const auto& [rel, hash] : manifest["files"].items()) {
    const fs::path rel_path(rel);
    if (rel_path.is_absolute() || rel.find("..") != std::string::npos) {
      throw Error("CorruptArtifact", "manifest names a path outside the artifact: " + rel);
    }
    std::string content;
    try {
      content = read_file(dir / rel_path);
    } catch (const Error&) {
      throw Error("CorruptArtifact", "missing artifact file " + rel);
    }
    if (!hash.is_string() || sha256_hex(content) != hash.get<std::string>()) {
      throw Error("CorruptArtifact", "hash mismatch for " + rel);
    }
    files.emplace(rel, std::move(content));
  }
  auto file = [&](const std::string& rel) -> const std::string& {
    auto it = files.find(rel);
    if (it == files.end()) throw Error("CorruptArtifact", "manifest does not list " + rel);
    return it->second;
  };

  try {
    const json pj = json::parse(file("pipeline.json"));
    const TaskKind task = parse_task_kind(pj.at("task").get<std::string>());
    const LabelSpec spec(pj.at("label_spec").at("lo").get<int>(), pj.at("label_spec").at("hi").get<int>());
    Tokenizer tok{parse_tokenizer_kind(pj.at("tokenizer").at("type").get<std::string>()),
                  pj.at("tokenizer").at("lowercase").get<bool>()};

    std::vector<Extractor> extractors;
    for (const auto& ej : pj.at("extractors")) {
      switch (parse_extractor_kind(ej.at("type").get<std::string>())) {
        case ExtractorKind::token_count: extractors.push_back(Extractor::token_count()); break;
        case ExtractorKind::avg_token_length: extractors.push_back(Extractor::avg_token_length()); break;
        case ExtractorKind::unigram_likelihood:
          extractors.push_back(Extractor::unigram_likelihood(std::make_shared<const UnigramTable>(
              UnigramTable::from_tsv(file(ej.at("resource").get<std::string>())))));
          break;
        case ExtractorKind::doc_embedding:
          extractors.push_back(Extractor::doc_embedding(std::make_shared<const VectorTable>(
              VectorTable::from_text(file(ej.at("resource").get<std::string>())))));
          break;
      }
    }
    FeaturePipeline pipeline(tok, std::move(extractors));
    if (pj.at("feature_names").get<std::vector<std::string>>() != pipeline.feature_names()) {
      throw Error("CorruptArtifact", "feature names disagree with the extractor list");
    }
    pipeline.set_train_means(pj.at("train_means").get<std::vector<double>>());
    if (!pj.at("standardizer").is_null()) {
      const auto& sj = pj.at("standardizer");
      pipeline.set_standardizer(
          Standardizer{sj.at("means").get<std::vector<double>>(), sj.at("stds").get<std::vector<double>>()});
    }

    const json mj = json::parse(file("model.json"));
    const auto type = mj.at("type").get<std::string>();
    Model model = LinearModel{};
    if (type == "ridge") {
      model = linear_from_json(mj);
    } else if (type == "logistic") {
      model = logistic_from_json(mj);
    } else if (type == "random_forest") {
      model = forest_from_json(mj);
    } else {
      throw Error("CorruptArtifact", "unknown model type '" + type + "'");
    }
    return Profiler(task, std::move(pipeline), std::move(model), spec, pj.at("output_normalized").get<bool>(),
                    file("config.yaml"));
  } catch (const json::exception& e) {
    throw Error("CorruptArtifact", std::string("malformed artifact: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == "CorruptArtifact") throw;
    throw Error("CorruptArtifact", e.what());
  }
}

}  // namespace ats
