#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ats {

using TokenList = std::vector<std::string>;

enum class TokenizerKind { space_punct, char_level };

std::string_view to_string(TokenizerKind kind);
TokenizerKind parse_tokenizer_kind(std::string_view name);

// Whitespace chunks with punctuation/symbol characters peeled off the chunk
// edges as single-character tokens ("don't" stays whole).
TokenList tokenize_space_punct(std::string_view text);
// One token per non-whitespace Unicode scalar value.
TokenList tokenize_char(std::string_view text);

struct Tokenizer {
  TokenizerKind kind = TokenizerKind::space_punct;
  bool lowercase = false;

  TokenList operator()(std::string_view text) const;
};

// Laplace-smoothed unigram probabilities with a single slot for unseen
// tokens: p(w) = (count(w) + 1) / (N + |V| + 1), p(<unk>) = 1 / (N + |V| + 1).
class UnigramTable {
 public:
  static constexpr std::string_view kUnkToken = "<unk>";

  UnigramTable(std::unordered_map<std::string, double> probs, double unk_prob);

  double prob(const std::string& token) const;
  double log_prob(const std::string& token) const;
  double unk_prob() const { return unk_prob_; }
  const std::unordered_map<std::string, double>& probs() const { return probs_; }

  // `token TAB probability` lines sorted by token, then `<unk> TAB p`.
  std::string to_tsv() const;
  static UnigramTable from_tsv(const std::string& content);
  static UnigramTable load(const std::filesystem::path& path);

 private:
  std::unordered_map<std::string, double> probs_;
  double unk_prob_;
};

UnigramTable build_unigram_table(std::span<const std::string> corpus_lines, const Tokenizer& tok);

class VectorTable {
 public:
  VectorTable(std::size_t dim, std::unordered_map<std::string, std::vector<double>> vectors);

  std::size_t dim() const { return dim_; }
  const std::vector<double>* find(const std::string& token) const;
  const std::unordered_map<std::string, std::vector<double>>& vectors() const { return vectors_; }

  // Headerless text format, sorted by word.
  std::string to_text() const;
  static VectorTable from_text(const std::string& content);

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

VectorTable load_word_vectors(const std::filesystem::path& path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace ats
