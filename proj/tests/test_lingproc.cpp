#include <doctest.h>

#include <cmath>
#include <map>

#include "ats/error.hpp"
#include "ats/lingproc.hpp"
#include "ats/text.hpp"
#include "support.hpp"

using namespace ats;

namespace {

std::string error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

std::string error_message(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.message();
  }
  return "";
}

using TL = TokenList;

}  // namespace

TEST_CASE("utf-8 decoding is lenient and tiles the input") {
  const std::string s = "a\xc3\xa9\xff\xe4\xbd\xa0";
  const auto chars = text::decode_utf8(s);
  REQUIRE(chars.size() == 4);
  CHECK(chars[1].code_point == 0xE9);
  CHECK(chars[2].code_point == 0xFFFD);
  CHECK(chars[2].length == 1);
  CHECK(chars[3].code_point == 0x4F60);
  CHECK(text::count_scalars("\xe4\xbd\xa0\xe5\xa5\xbd") == 2);
  CHECK(text::encode_utf8(0x1F600) == "\xf0\x9f\x98\x80");
}

TEST_CASE("character classes sampled against the Unicode database") {
  CHECK(text::is_punct_or_symbol(U','));
  CHECK(text::is_punct_or_symbol(U'$'));
  CHECK(text::is_punct_or_symbol(0x20AC));   // euro sign, Sc
  CHECK(text::is_punct_or_symbol(0x3002));   // ideographic full stop, Po
  CHECK(text::is_punct_or_symbol(0x1F600));  // emoji, So
  CHECK_FALSE(text::is_punct_or_symbol(U'a'));
  CHECK_FALSE(text::is_punct_or_symbol(0x4F60));
  CHECK_FALSE(text::is_punct_or_symbol(U'7'));
  CHECK(text::is_whitespace(0x3000));
  CHECK(text::is_whitespace(0x00A0));
  CHECK(text::is_whitespace(U'\n'));
  CHECK_FALSE(text::is_whitespace(0x200B));  // zero width space is Cf
  CHECK(text::to_lower(U'Ä') == U'ä');
  CHECK(text::to_lower(U'Σ') == U'σ');
  CHECK(text::to_lower(U'İ') == U'İ');  // multi-character lowering is left alone
  CHECK(text::to_lower("\xc3\x84" "B") == "\xc3\xa4" "b");
}

TEST_CASE("tokenize_space_punct examples") {
  CHECK(tokenize_space_punct("Hello, world!") == TL{"Hello", ",", "world", "!"});
  CHECK(tokenize_space_punct("a  b") == TL{"a", "b"});
  CHECK(tokenize_space_punct("").empty());
  CHECK(tokenize_space_punct("   \n\t").empty());
  CHECK(tokenize_space_punct("don't") == TL{"don't"});
  CHECK(tokenize_space_punct("(\"quoted\")...") == TL{"(", "\"", "quoted", "\"", ")", ".", ".", "."});
  CHECK(tokenize_space_punct("!!!") == TL{"!", "!", "!"});
  CHECK(tokenize_space_punct("\xe4\xbd\xa0\xe5\xa5\xbd\xe3\x80\x82") == TL{"\xe4\xbd\xa0\xe5\xa5\xbd", "\xe3\x80\x82"});
  CHECK(tokenize_space_punct("a\xe3\x80\x80" "b") == TL{"a", "b"});
}

TEST_CASE("tokenizer lowercases last") {
  const Tokenizer tok{TokenizerKind::space_punct, true};
  CHECK(tok("Hello, WORLD!") == TL{"hello", ",", "world", "!"});
  CHECK(Tokenizer{}("Hello") == TL{"Hello"});
  CHECK(Tokenizer{TokenizerKind::char_level, true}("AB") == TL{"a", "b"});
}

TEST_CASE("tokenize_char examples") {
  CHECK(tokenize_char("\xe4\xbd\xa0\xe5\xa5\xbd") == TL{"\xe4\xbd\xa0", "\xe5\xa5\xbd"});
  CHECK(tokenize_char("\xe4\xbd\xa0 \xe5\xa5\xbd") == TL{"\xe4\xbd\xa0", "\xe5\xa5\xbd"});
  CHECK(tokenize_char("ab") == TL{"a", "b"});
  CHECK(tokenize_char("").empty());
}

TEST_CASE("tokenizer kind names") {
  CHECK(parse_tokenizer_kind("whitespace") == TokenizerKind::space_punct);
  CHECK(parse_tokenizer_kind("char") == TokenizerKind::char_level);
  CHECK(to_string(TokenizerKind::char_level) == "char");
  CHECK(error_code([] { parse_tokenizer_kind("spacy"); }) == "UnknownType");
}

TEST_CASE("property: tokenize_char counts non-whitespace scalars") {
  const std::vector<std::pair<std::string, bool>> alphabet = {
      {"a", true},  {"Z", true},  {"\xe4\xbd\xa0", true}, {"\xf0\x9f\x98\x80", true}, {",", true},
      {" ", false}, {"\t", false}, {"\n", false},          {"\xe3\x80\x80", false},     {"\xc2\xa0", false}};
  ats_test::Gen g(21);
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    std::size_t expected = 0;
    const int n = g.integer(0, 40);
    for (int i = 0; i < n; ++i) {
      const auto& [piece, counts] = alphabet[static_cast<std::size_t>(g.integer(0, 9))];
      s += piece;
      expected += counts ? 1 : 0;
    }
    const auto toks = tokenize_char(s);
    REQUIRE(toks.size() == expected);
    REQUIRE(tokenize_char(s) == toks);
  }
}

TEST_CASE("property: space_punct tokens never contain whitespace and never start or end a multi-char chunk with punctuation") {
  ats_test::Gen g(22);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = g.text();
    for (const auto& t : tokenize_space_punct(s)) {
      REQUIRE_FALSE(t.empty());
      const auto chars = text::decode_utf8(t);
      for (const auto& c : chars) REQUIRE_FALSE(text::is_whitespace(c.code_point));
      if (chars.size() > 1) {
        REQUIRE_FALSE(text::is_punct_or_symbol(chars.front().code_point));
        REQUIRE_FALSE(text::is_punct_or_symbol(chars.back().code_point));
      }
    }
  }
}

TEST_CASE("unigram table examples") {
  const std::vector<std::string> corpus = {"a a b"};
  const auto t = build_unigram_table(corpus, Tokenizer{});
  CHECK(t.prob("a") == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.prob("b") == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(t.unk_prob() == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(t.prob("zzz") == t.unk_prob());

  const std::vector<std::string> one = {"a"};
  const auto t1 = build_unigram_table(one, Tokenizer{});
  CHECK(t1.prob("a") == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(t1.unk_prob() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const std::vector<std::string> empty = {"", "  "};
  CHECK(error_code([&] { build_unigram_table(empty, Tokenizer{}); }) == "EmptyCorpus");
  CHECK(error_code([] { build_unigram_table({}, Tokenizer{}); }) == "EmptyCorpus");
}

TEST_CASE("property: unigram table matches a counting oracle and sums to one") {
  ats_test::Gen g(23);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> lines;
    std::map<std::string, int> counts;
    int total = 0;
    const int n_lines = g.integer(1, 10);
    for (int i = 0; i < n_lines; ++i) {
      std::string line;
      const int n = g.integer(0, 12);
      for (int k = 0; k < n; ++k) {
        const auto w = g.word(1, 2);
        line += (k ? " " : "") + w;
        ++counts[w];
        ++total;
      }
      lines.push_back(line);
    }
    if (total == 0) continue;
    const auto t = build_unigram_table(lines, Tokenizer{});
    const double denom = total + static_cast<double>(counts.size()) + 1;
    double sum = t.unk_prob();
    REQUIRE(t.unk_prob() == doctest::Approx(1.0 / denom).epsilon(1e-14));
    for (const auto& [w, c] : counts) REQUIRE(t.prob(w) == doctest::Approx((c + 1) / denom).epsilon(1e-14));
    for (const auto& [w, p] : t.probs()) sum += p;
    REQUIRE(std::abs(sum - 1.0) <= 1e-9);
    REQUIRE(t.probs().size() == counts.size());
  }
}

TEST_CASE("unigram table serialization") {
  const std::vector<std::string> corpus = {"b a a"};
  const auto t = build_unigram_table(corpus, Tokenizer{});
  CHECK(t.to_tsv() == "a\t0.5\nb\t0.3333333333333333\n<unk>\t0.16666666666666666\n");
  const auto back = UnigramTable::from_tsv(t.to_tsv());
  CHECK(back.prob("a") == t.prob("a"));
  CHECK(back.prob("b") == t.prob("b"));
  CHECK(back.unk_prob() == t.unk_prob());
  CHECK(back.to_tsv() == t.to_tsv());
}

TEST_CASE("unigram table validation") {
  CHECK(error_code([] { UnigramTable::from_tsv("a\t0.5\n"); }) == "BadUnigramTable");               // no <unk>
  CHECK(error_code([] { UnigramTable::from_tsv("a\t0.9\n<unk>\t0.5\n"); }) == "BadUnigramTable");  // sum
  CHECK(error_code([] { UnigramTable::from_tsv("a\t0\n<unk>\t1\n"); }) == "BadUnigramTable");      // zero
  CHECK(error_code([] { UnigramTable::from_tsv("a\tx\n<unk>\t1\n"); }) == "BadUnigramTable");
  CHECK(error_code([] { UnigramTable::load("/no/such/table.tsv"); }) == "FileNotFound");
}

TEST_CASE("word vectors") {
  const auto v = VectorTable::from_text("a 1 0\nb 0 1\n");
  CHECK(v.dim() == 2);
  CHECK(v.vectors().size() == 2);
  REQUIRE(v.find("b") != nullptr);
  CHECK(*v.find("b") == std::vector<double>{0, 1});
  CHECK(v.find("c") == nullptr);

  const auto msg = error_message([] { VectorTable::from_text("a 1 0\nb 1\n"); });
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(error_code([] { VectorTable::from_text("a 1 0\nb 1\n"); }) == "DimMismatch");
  CHECK(error_code([] { VectorTable::from_text("a 1 x\n"); }) == "BadVector");

  const auto headed = VectorTable::from_text("2 2\na 1 0\nb 0 1\n");
  CHECK(headed.dim() == 2);
  CHECK(headed.to_text() == v.to_text());

  const auto dup = VectorTable::from_text("a 1 0\na 5 5\n");
  CHECK(*dup.find("a") == std::vector<double>{1, 0});

  CHECK(VectorTable::from_text(v.to_text()).to_text() == v.to_text());
  CHECK(error_code([] { load_word_vectors("/no/such/vectors.txt"); }) == "FileNotFound");
}

TEST_CASE("format_double is the shortest round-trip form") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
  CHECK(format_double(-2.0) == "-2");
  ats_test::Gen g(24);
  for (int i = 0; i < 1000; ++i) {
    const double v = g.real(-1e6, 1e6) * std::pow(10.0, g.integer(-20, 20));
    REQUIRE(std::stod(format_double(v)) == v);
  }
}
