#include "ats/lingproc.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "ats/dataset_io.hpp"
#include "ats/error.hpp"
#include "ats/text.hpp"

namespace ats {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view content) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    out.push_back(content.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool is_uint(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string_view to_string(TokenizerKind kind) {
  return kind == TokenizerKind::space_punct ? "whitespace" : "char";
}

TokenizerKind parse_tokenizer_kind(std::string_view name) {
  if (name == "whitespace") return TokenizerKind::space_punct;
  if (name == "char") return TokenizerKind::char_level;
  throw Error("UnknownType", "tokenizer type '" + std::string(name) + "' (valid: whitespace, char)");
}

TokenList tokenize_space_punct(std::string_view text) {
  TokenList tokens;
  const auto chars = text::decode_utf8(text);
  std::size_t i = 0;
  while (i < chars.size()) {
    if (text::is_whitespace(chars[i].code_point)) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < chars.size() && !text::is_whitespace(chars[end].code_point)) ++end;

    std::size_t core_begin = i;
    std::size_t core_end = end;
    while (core_begin < core_end && text::is_punct_or_symbol(chars[core_begin].code_point)) ++core_begin;
    while (core_end > core_begin && text::is_punct_or_symbol(chars[core_end - 1].code_point)) --core_end;

    auto piece = [&](std::size_t a, std::size_t b) {
      const std::size_t from = chars[a].offset;
      const std::size_t to = chars[b - 1].offset + chars[b - 1].length;
      tokens.emplace_back(text.substr(from, to - from));
    };
    for (std::size_t k = i; k < core_begin; ++k) piece(k, k + 1);
    if (core_begin < core_end) piece(core_begin, core_end);
    for (std::size_t k = core_end; k < end; ++k) piece(k, k + 1);
    i = end;
  }
  return tokens;
}

TokenList tokenize_char(std::string_view text) {
  TokenList tokens;
  for (const auto& ch : text::decode_utf8(text)) {
    if (!text::is_whitespace(ch.code_point)) tokens.emplace_back(text.substr(ch.offset, ch.length));
  }
  return tokens;
}

TokenList Tokenizer::operator()(std::string_view input) const {
  TokenList tokens = kind == TokenizerKind::space_punct ? tokenize_space_punct(input) : tokenize_char(input);
  if (lowercase) {
    for (auto& t : tokens) t = text::to_lower(t);
  }
  return tokens;
}

UnigramTable::UnigramTable(std::unordered_map<std::string, double> probs, double unk_prob)
    : probs_(std::move(probs)), unk_prob_(unk_prob) {
  auto in_range = [](double p) { return std::isfinite(p) && p > 0.0 && p <= 1.0; };
  if (!in_range(unk_prob_)) throw Error("BadUnigramTable", "unknown-token probability outside (0, 1]");
  double total = unk_prob_;
  for (const auto& [token, p] : probs_) {
    if (!in_range(p)) throw Error("BadUnigramTable", "probability of '" + token + "' outside (0, 1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error("BadUnigramTable", "probabilities sum to " + format_double(total) + ", expected 1");
  }
}

double UnigramTable::prob(const std::string& token) const {
  auto it = probs_.find(token);
  return it == probs_.end() ? unk_prob_ : it->second;
}

double UnigramTable::log_prob(const std::string& token) const { return std::log(prob(token)); }

std::string UnigramTable::to_tsv() const {
  std::map<std::string, double> sorted(probs_.begin(), probs_.end());
  std::string out;
  for (const auto& [token, p] : sorted) {
    out += token;
    out += '\t';
    out += format_double(p);
    out += '\n';
  }
  out += kUnkToken;
  out += '\t';
  out += format_double(unk_prob_);
  out += '\n';
  return out;
}

UnigramTable UnigramTable::from_tsv(const std::string& content) {
  std::unordered_map<std::string, double> probs;
  std::optional<double> unk;
  const auto lines = lines_of(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = lines[i];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      throw Error("MalformedRow", "unigram table line " + std::to_string(i + 1) + ": expected `token TAB prob`");
    }
    const auto p = parse_double(line.substr(tab + 1));
    if (!p) throw Error("BadUnigramTable", "unigram table line " + std::to_string(i + 1) + ": bad probability");
    const auto token = line.substr(0, tab);
    if (token == kUnkToken) {
      unk = *p;
    } else {
      probs.emplace(std::string(token), *p);
    }
  }
  if (!unk) throw Error("BadUnigramTable", "unigram table lacks the <unk> line");
  return UnigramTable(std::move(probs), *unk);
}

UnigramTable UnigramTable::load(const std::filesystem::path& path) { return from_tsv(read_file(path)); }

UnigramTable build_unigram_table(std::span<const std::string> corpus_lines, const Tokenizer& tok) {
  std::unordered_map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& line : corpus_lines) {
    for (auto& t : tok(line)) {
      ++counts[std::move(t)];
      ++total;
    }
  }
  if (total == 0) throw Error("EmptyCorpus", "unigram corpus contains no tokens");
  const double z = static_cast<double>(total + counts.size() + 1);
  std::unordered_map<std::string, double> probs;
  probs.reserve(counts.size());
  for (const auto& [token, c] : counts) probs.emplace(token, static_cast<double>(c + 1) / z);
  return UnigramTable(std::move(probs), 1.0 / z);
}

VectorTable::VectorTable(std::size_t dim, std::unordered_map<std::string, std::vector<double>> vectors)
    : dim_(dim), vectors_(std::move(vectors)) {
  if (dim_ == 0) throw Error("DimMismatch", "word vectors need a positive dimension");
  for (const auto& [word, v] : vectors_) {
    if (v.size() != dim_) throw Error("DimMismatch", "vector for '" + word + "' has the wrong dimension");
  }
}

const std::vector<double>* VectorTable::find(const std::string& token) const {
  auto it = vectors_.find(token);
  return it == vectors_.end() ? nullptr : &it->second;
}

std::string VectorTable::to_text() const {
  std::map<std::string, const std::vector<double>*> sorted;
  for (const auto& [w, v] : vectors_) sorted.emplace(w, &v);
  std::string out;
  for (const auto& [w, v] : sorted) {
    out += w;
    for (double x : *v) {
      out += ' ';
      out += format_double(x);
    }
    out += '\n';
  }
  return out;
}

VectorTable VectorTable::from_text(const std::string& content) {
  std::unordered_map<std::string, std::vector<double>> vectors;
  std::size_t dim = 0;
  const auto lines = lines_of(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto fields = split_ws(lines[i]);
    if (fields.empty()) continue;
    const std::string where = "line " + std::to_string(i + 1);
    // word2vec-style `count dim` header, only recognised on the first line.
    if (i == 0 && fields.size() == 2 && is_uint(fields[0]) && is_uint(fields[1])) continue;
    if (fields.size() < 2) throw Error("BadVector", where + ": a word needs at least one component");
    const std::size_t n = fields.size() - 1;
    if (dim == 0) {
      dim = n;
    } else if (n != dim) {
      throw Error("DimMismatch", where + ": expected " + std::to_string(dim) + " components, found " +
                                     std::to_string(n));
    }
    std::vector<double> v;
    v.reserve(n);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      auto x = parse_double(fields[k]);
      if (!x) throw Error("BadVector", where + ": cannot parse '" + std::string(fields[k]) + "'");
      v.push_back(*x);
    }
    vectors.try_emplace(std::string(fields[0]), std::move(v));
  }
  if (dim == 0) throw Error("BadVector", "word-vector file has no vectors");
  return VectorTable(dim, std::move(vectors));
}

VectorTable load_word_vectors(const std::filesystem::path& path) { return VectorTable::from_text(read_file(path)); }

}  // namespace ats
