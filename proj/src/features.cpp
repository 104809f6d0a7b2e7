#include "ats/features.hpp"

#include <cmath>
#include <unordered_set>

#include "ats/error.hpp"
#include "ats/text.hpp"

namespace ats {

double token_count(const TokenList& tokens) { return static_cast<double>(tokens.size()); }

double avg_token_length(const TokenList& tokens) {
  if (tokens.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& t : tokens) total += text::count_scalars(t);
  return static_cast<double>(total) / static_cast<double>(tokens.size());
}

double avg_unigram_loglik(const TokenList& tokens, const UnigramTable& table) {
  if (tokens.empty()) return std::log(table.unk_prob());
  double sum = 0.0;
  for (const auto& t : tokens) sum += table.log_prob(t);
  return sum / static_cast<double>(tokens.size());
}

std::vector<double> doc_embedding(const TokenList& tokens, const VectorTable& vt) {
  std::vector<double> mean(vt.dim(), 0.0);
  std::size_t hits = 0;
  for (const auto& t : tokens) {
    if (const auto* v = vt.find(t)) {
      for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += (*v)[k];
      ++hits;
    }
  }
  if (hits > 0) {
    for (auto& x : mean) x /= static_cast<double>(hits);
  }
  return mean;
}

void Standardizer::apply(std::span<double> values) const {
  if (values.size() != means.size()) throw Error("DimMismatch", "standardizer dimension mismatch");
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double sd = stds[j] > 0.0 ? stds[j] : 1.0;
    values[j] = (values[j] - means[j]) / sd;
  }
}

Standardizer fit_standardizer(const Matrix& rows) {
  if (rows.rows() == 0) throw Error("EmptyTrainingSet", "cannot fit a standardizer on zero rows");
  const std::size_t n = rows.rows();
  const std::size_t d = rows.cols();
  Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) s.means[j] += rows(i, j);
  }
  for (auto& m : s.means) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = rows(i, j) - s.means[j];
      s.stds[j] += dev * dev;
    }
  }
  for (auto& sd : s.stds) sd = std::sqrt(sd / static_cast<double>(n));
  return s;
}

std::string_view to_string(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::token_count: return "token_count";
    case ExtractorKind::avg_token_length: return "avg_token_length";
    case ExtractorKind::unigram_likelihood: return "unigram_likelihood";
    case ExtractorKind::doc_embedding: return "doc_embedding";
  }
  return "?";
}

ExtractorKind parse_extractor_kind(std::string_view name) {
  if (name == "token_count") return ExtractorKind::token_count;
  if (name == "avg_token_length") return ExtractorKind::avg_token_length;
  if (name == "unigram_likelihood") return ExtractorKind::unigram_likelihood;
  if (name == "doc_embedding") return ExtractorKind::doc_embedding;
  throw Error("UnknownType", "feature type '" + std::string(name) +
                                 "' (valid: token_count, avg_token_length, unigram_likelihood, doc_embedding)");
}

Extractor Extractor::token_count() { return {ExtractorKind::token_count, nullptr, nullptr}; }
Extractor Extractor::avg_token_length() { return {ExtractorKind::avg_token_length, nullptr, nullptr}; }

Extractor Extractor::unigram_likelihood(std::shared_ptr<const UnigramTable> table) {
  if (!table) throw Error("MissingResource", "unigram_likelihood needs a unigram table");
  return {ExtractorKind::unigram_likelihood, std::move(table), nullptr};
}

Extractor Extractor::doc_embedding(std::shared_ptr<const VectorTable> table) {
  if (!table) throw Error("MissingResource", "doc_embedding needs a word-vector table");
  return {ExtractorKind::doc_embedding, nullptr, std::move(table)};
}

std::size_t Extractor::dims() const { return kind == ExtractorKind::doc_embedding ? vectors->dim() : 1; }

void Extractor::append(const TokenList& tokens, std::vector<double>& out) const {
  switch (kind) {
    case ExtractorKind::token_count: out.push_back(ats::token_count(tokens)); break;
    case ExtractorKind::avg_token_length: out.push_back(ats::avg_token_length(tokens)); break;
    case ExtractorKind::unigram_likelihood: out.push_back(avg_unigram_loglik(tokens, *unigram)); break;
    case ExtractorKind::doc_embedding: {
      const auto v = ats::doc_embedding(tokens, *vectors);
      out.insert(out.end(), v.begin(), v.end());
      break;
    }
  }
}

FeaturePipeline::FeaturePipeline(Tokenizer tokenizer, std::vector<Extractor> extractors)
    : tokenizer_(tokenizer), extractors_(std::move(extractors)) {
  if (extractors_.empty()) throw Error("BadParam", "a feature pipeline needs at least one extractor");
  std::unordered_set<std::string> seen;
  for (const auto& ex : extractors_) {
    const std::string base(to_string(ex.kind));
    std::vector<std::string> names;
    if (ex.kind == ExtractorKind::doc_embedding) {
      for (std::size_t k = 0; k < ex.dims(); ++k) names.push_back(base + "_" + std::to_string(k));
    } else {
      names.push_back(base);
    }
    for (const auto& original : names) {
      // Repeated extractors get a numeric suffix so names stay unique.
      std::string name = original;
      for (int copy = 2; seen.count(name) > 0; ++copy) name = original + "#" + std::to_string(copy);
      seen.insert(name);
      names_.push_back(std::move(name));
    }
  }
  train_means_.assign(names_.size(), 0.0);
}

std::vector<double> FeaturePipeline::raw_features(const TokenList& tokens) const {
  std::vector<double> out;
  out.reserve(names_.size());
  for (const auto& ex : extractors_) ex.append(tokens, out);
  return out;
}

FeatureVector FeaturePipeline::extract_tokens(const TokenList& tokens) const {
  FeatureVector fv{raw_features(tokens), names_};
  if (standardizer_) standardizer_->apply(fv.values);
  return fv;
}

FeatureVector FeaturePipeline::extract(std::string_view text) const { return extract_tokens(tokenizer_(text)); }

Matrix FeaturePipeline::raw_matrix(std::span<const std::string> texts) const {
  Matrix m(texts.size(), dims());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto row = raw_features(tokenizer_(texts[i]));
    std::copy(row.begin(), row.end(), m.row(i).begin());
  }
  return m;
}

void FeaturePipeline::set_standardizer(std::optional<Standardizer> s) {
  if (s && (s->means.size() != dims() || s->stds.size() != dims())) {
    throw Error("DimMismatch", "standardizer dimension does not match the pipeline");
  }
  standardizer_ = std::move(s);
}

void FeaturePipeline::set_train_means(std::vector<double> means) {
  if (means.size() != dims()) throw Error("DimMismatch", "training means do not match the pipeline");
  train_means_ = std::move(means);
}

}  // namespace ats
