#include "ats/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string_view>

#include "ats/error.hpp"
#include "ats/random.hpp"

namespace ats {

namespace {

std::vector<std::string_view> split_lines(std::string_view content) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto end = line.find('\t', start);
    if (end == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<int> parse_int(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

std::string line_ref(std::size_t line_no) { return "line " + std::to_string(line_no); }

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("FileNotFound", "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Dataset parse_tsv(const std::string& content, const TsvOptions& options, const std::string& name) {
  struct Row {
    std::size_t line_no;
    int label;
    std::string text;
  };
  std::vector<Row> rows;
  const auto lines = split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = lines[i];
    const std::size_t line_no = i + 1;
    if (is_blank(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2) {
      throw Error("MalformedRow", line_ref(line_no) + ": expected exactly one tab, found " +
                                      std::to_string(fields.size() - 1));
    }
    std::optional<int> label;
    if (options.label_names.empty()) {
      label = parse_int(fields[0]);
    } else {
      const auto key = trim(fields[0]);
      auto it = std::find(options.label_names.begin(), options.label_names.end(), key);
      if (it != options.label_names.end()) {
        label = static_cast<int>(it - options.label_names.begin());
      }
    }
    if (!label) {
      throw Error("BadLabel", line_ref(line_no) + ": cannot parse label '" + std::string(fields[0]) + "'");
    }
    rows.push_back({line_no, *label, std::string(fields[1])});
  }
  if (rows.empty()) throw Error("EmptyDataset", "'" + name + "' contains no rows");

  std::optional<LabelSpec> spec = options.label_spec;
  if (!spec && !options.label_names.empty()) {
    spec = LabelSpec(0, static_cast<int>(options.label_names.size()) - 1);
  }
  if (!spec) {
    auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(),
                                        [](const Row& a, const Row& b) { return a.label < b.label; });
    // A corpus with a single observed label still needs a two-label range.
    const int hi_label = hi->label == lo->label ? lo->label + 1 : hi->label;
    spec = LabelSpec(lo->label, hi_label);
  }

  Dataset ds;
  ds.name = name;
  ds.label_spec = *spec;
  ds.instances.reserve(rows.size());
  for (auto& row : rows) {
    if (!spec->contains(row.label)) {
      throw Error("LabelOutOfRange", line_ref(row.line_no) + ": label " + std::to_string(row.label) +
                                         " outside [" + std::to_string(spec->lo()) + ", " +
                                         std::to_string(spec->hi()) + "]");
    }
    ds.instances.push_back({std::to_string(row.line_no), std::move(row.text), row.label, std::nullopt});
  }
  return ds;
}

Dataset read_tsv(const std::filesystem::path& path, const TsvOptions& options) {
  return parse_tsv(read_file(path), options, path.filename().string());
}

std::string write_tsv(const Dataset& ds) {
  std::string out;
  for (const auto& inst : ds.instances) {
    out += std::to_string(inst.label.value_or(ds.label_spec.lo()));
    out += '\t';
    out += inst.text;
    out += '\n';
  }
  return out;
}

std::map<int, LabelSpec> default_asap_ranges() {
  return {{1, {2, 12}}, {2, {1, 6}}, {3, {0, 3}}, {4, {0, 3}},
          {5, {0, 4}},  {6, {0, 4}}, {7, {0, 30}}, {8, {0, 60}}};
}

Dataset parse_asap(const std::string& content, int prompt_id, const std::map<int, LabelSpec>& ranges) {
  auto range = ranges.find(prompt_id);
  if (range == ranges.end()) {
    throw Error("BadPrompt", "prompt id " + std::to_string(prompt_id) + " has no score range");
  }
  const auto lines = split_lines(content);
  if (lines.empty()) throw Error("EmptyDataset", "ASAP file is empty");

  const auto header = split_tabs(lines[0]);
  auto column = [&](std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    throw Error("MissingColumn", "ASAP header lacks column '" + std::string(name) + "'");
  };
  const std::size_t id_col = column("essay_id");
  const std::size_t set_col = column("essay_set");
  const std::size_t essay_col = column("essay");
  const std::size_t score_col = column("domain1_score");
  const std::size_t needed = std::max({id_col, set_col, essay_col, score_col}) + 1;

  Dataset ds;
  ds.name = "asap-aes/prompt" + std::to_string(prompt_id);
  ds.label_spec = range->second;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    const auto fields = split_tabs(lines[i]);
    const std::size_t line_no = i + 1;
    if (fields.size() < needed) {
      throw Error("MalformedRow", line_ref(line_no) + ": expected at least " + std::to_string(needed) +
                                      " columns, found " + std::to_string(fields.size()));
    }
    auto essay_set = parse_int(fields[set_col]);
    if (!essay_set) throw Error("BadLabel", line_ref(line_no) + ": bad essay_set");
    if (*essay_set != prompt_id) continue;
    auto score = parse_int(fields[score_col]);
    if (!score) throw Error("BadLabel", line_ref(line_no) + ": bad domain1_score");
    if (!ds.label_spec.contains(*score)) {
      throw Error("LabelOutOfRange", line_ref(line_no) + ": domain1_score " + std::to_string(*score) +
                                         " outside prompt " + std::to_string(prompt_id) + " range");
    }
    ds.instances.push_back({std::string(trim(fields[id_col])), std::string(fields[essay_col]), *score,
                            std::nullopt});
  }
  if (ds.empty()) {
    throw Error("EmptyDataset", "no essays for prompt " + std::to_string(prompt_id));
  }
  return ds;
}

Dataset read_asap(const std::filesystem::path& path, int prompt_id, const std::map<int, LabelSpec>& ranges) {
  return parse_asap(read_file(path), prompt_id, ranges);
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_ratio, std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw Error("BadRatio", "train ratio must lie strictly between 0 and 1");
  }
  if (ds.empty()) throw Error("EmptyDataset", "cannot split an empty dataset");

  const std::size_t n = ds.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  SplitMix64 rng(seed);
  shuffle(order, rng);

  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_ratio));
  if (n_train == 0) {
    std::cerr << "warning: split of " << n << " instance(s) at ratio " << train_ratio
              << " leaves the training side empty\n";
  }
  // Keep input order on each side; the shuffle only decides membership.
  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;

  Dataset train, test;
  train.label_spec = test.label_spec = ds.label_spec;
  train.name = ds.name + "/train";
  test.name = ds.name + "/test";
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? train : test).instances.push_back(ds.instances[i]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace ats
