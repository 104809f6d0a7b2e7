// ats-unigram: builds a Laplace-smoothed unigram table from a plain-text
// corpus (one document per line) or from the text column of a label TSV.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ats/error.hpp"
#include "ats/lingproc.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Build a unigram probability table for the unigram_likelihood feature"};
  std::string corpus, output, tokenizer = "whitespace";
  bool lowercase = false;
  bool tsv = false;
  app.add_option("corpus", corpus, "Corpus file, one document per line")->required();
  app.add_option("output", output, "Output table (token TAB probability)")->required();
  app.add_option("--tokenizer", tokenizer)->check(CLI::IsMember({"whitespace", "char"}));
  app.add_flag("--lowercase", lowercase);
  app.add_flag("--tsv", tsv, "Corpus is `label TAB text`; only the text column is counted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    std::ifstream in(corpus, std::ios::binary);
    if (!in) throw ats::Error("FileNotFound", "cannot read " + corpus);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (tsv) {
        const auto tab = line.find('\t');
        line = tab == std::string::npos ? std::string() : line.substr(tab + 1);
      }
      lines.push_back(std::move(line));
    }
    const ats::Tokenizer tok{ats::parse_tokenizer_kind(tokenizer), lowercase};
    const auto table = ats::build_unigram_table(lines, tok);
    std::ofstream out(output, std::ios::binary);
    if (!out) throw ats::Error("WriteError", "cannot write " + output);
    out << table.to_tsv();
    std::cerr << table.probs().size() << " types written to " << output << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
