#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ats/config.hpp"
#include "ats/features.hpp"
#include "ats/learners.hpp"
#include "ats/types.hpp"

namespace ats {

using Model = std::variant<LinearModel, LogisticModel, Forest>;

inline constexpr std::string_view kArtifactFormatVersion = "1";

// Tokenizer + features + learner, trained for one task and label range.
class Profiler {
 public:
  Profiler(TaskKind task, FeaturePipeline pipeline, Model model, LabelSpec spec, bool output_normalized,
           std::string config_text);

  static Profiler train(const ExperimentConfig& cfg);
  // Trains on an explicit dataset instead of the one named in cfg.
  static Profiler train(const ExperimentConfig& cfg, const Dataset& training);

  Prediction predict(std::string_view text) const;
  Prediction predict_tokens(const TokenList& tokens) const;
  // Runs standardization (if fitted) and the model on raw feature values.
  Prediction predict_raw_features(std::vector<double> raw) const;

  TaskKind task() const { return task_; }
  const FeaturePipeline& pipeline() const { return pipeline_; }
  const Model& model() const { return model_; }
  const LabelSpec& label_spec() const { return spec_; }
  bool output_normalized() const { return output_normalized_; }
  const std::string& config_text() const { return config_text_; }

  // Artifact directory: config.yaml, pipeline.json, model.json,
  // resources/, manifest.json.
  void save(const std::filesystem::path& dir) const;
  static Profiler load(const std::filesystem::path& dir);

 private:
  TaskKind task_;
  FeaturePipeline pipeline_;
  Model model_;
  LabelSpec spec_;
  bool output_normalized_;
  std::string config_text_;
};

// Reads the dataset a configuration names (before any train/test split).
Dataset load_dataset(const ExperimentConfig& cfg);
// The part of that dataset used for training: all of it, or the training
// side of the configured split.
Dataset training_dataset(const ExperimentConfig& cfg);

std::string sha256_hex(std::string_view data);

}  // namespace ats
