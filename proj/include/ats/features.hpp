#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ats/lingproc.hpp"
#include "ats/matrix.hpp"

namespace ats {

double token_count(const TokenList& tokens);
// Mean length in Unicode scalar values; 0 for no tokens.
double avg_token_length(const TokenList& tokens);
// Mean natural-log probability; ln(unk_prob) for no tokens.
double avg_unigram_loglik(const TokenList& tokens, const UnigramTable& table);
// Mean vector of in-vocabulary tokens; zero vector when none are known.
std::vector<double> doc_embedding(const TokenList& tokens, const VectorTable& vt);

struct FeatureVector {
  std::vector<double> values;
  std::vector<std::string> names;
};

// Per-dimension mean and population standard deviation. Zero deviations are
// stored as-is and treated as 1 when applied.
struct Standardizer {
  std::vector<double> means;
  std::vector<double> stds;

  void apply(std::span<double> values) const;
};

Standardizer fit_standardizer(const Matrix& rows);

enum class ExtractorKind { token_count, avg_token_length, unigram_likelihood, doc_embedding };

std::string_view to_string(ExtractorKind kind);
ExtractorKind parse_extractor_kind(std::string_view name);

struct Extractor {
  ExtractorKind kind = ExtractorKind::token_count;
  std::shared_ptr<const UnigramTable> unigram;   // unigram_likelihood only
  std::shared_ptr<const VectorTable> vectors;    // doc_embedding only

  static Extractor token_count();
  static Extractor avg_token_length();
  static Extractor unigram_likelihood(std::shared_ptr<const UnigramTable> table);
  static Extractor doc_embedding(std::shared_ptr<const VectorTable> table);

  std::size_t dims() const;
  void append(const TokenList& tokens, std::vector<double>& out) const;
};

class FeaturePipeline {
 public:
  FeaturePipeline(Tokenizer tokenizer, std::vector<Extractor> extractors);

  const Tokenizer& tokenizer() const { return tokenizer_; }
  const std::vector<Extractor>& extractors() const { return extractors_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  std::size_t dims() const { return names_.size(); }

  // Feature values before standardization.
  std::vector<double> raw_features(const TokenList& tokens) const;

  // Tokenize, run every extractor in order, then standardize if fitted.
  FeatureVector extract(std::string_view text) const;
  FeatureVector extract_tokens(const TokenList& tokens) const;

  // Raw-feature matrix for a corpus, one row per text.
  Matrix raw_matrix(std::span<const std::string> texts) const;

  const std::optional<Standardizer>& standardizer() const { return standardizer_; }
  void set_standardizer(std::optional<Standardizer> s);

  // Training-set means of the raw features, kept even when standardization
  // is off (feature ablation replaces a feature by this value). Zero until set.
  const std::vector<double>& train_means() const { return train_means_; }
  void set_train_means(std::vector<double> means);

 private:
  Tokenizer tokenizer_;
  std::vector<Extractor> extractors_;
  std::vector<std::string> names_;
  std::optional<Standardizer> standardizer_;
  std::vector<double> train_means_;
};

}  // namespace ats
