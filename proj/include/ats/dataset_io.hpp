#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ats/types.hpp"

namespace ats {

struct TsvOptions {
  // Explicit label universe. When absent it is inferred as [min, max] of
  // the observed labels.
  std::optional<LabelSpec> label_spec;
  // Ordered class names for corpora whose label column is not numeric;
  // names[i] maps to label i (the names give the ordinal order).
  std::vector<std::string> label_names;
};

// Simple TSV: `<label> TAB <text>` per line, no header, no tabs inside text.
Dataset read_tsv(const std::filesystem::path& path, const TsvOptions& options = {});
Dataset parse_tsv(const std::string& content, const TsvOptions& options = {},
                  const std::string& name = "tsv");
std::string write_tsv(const Dataset& ds);

// Per-prompt score ranges published with the ASAP-AES corpus.
std::map<int, LabelSpec> default_asap_ranges();

// ASAP-AES TSV with header. Only essay_id, essay_set, essay and
// domain1_score are read; other columns are ignored.
Dataset read_asap(const std::filesystem::path& path, int prompt_id,
                  const std::map<int, LabelSpec>& ranges = default_asap_ranges());
Dataset parse_asap(const std::string& content, int prompt_id,
                   const std::map<int, LabelSpec>& ranges = default_asap_ranges());

// Seeded shuffle, then the first floor(n * train_ratio) instances become the
// training side. Both halves keep the input's label spec. Each side keeps
// the relative input order of its members.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_ratio, std::uint64_t seed);

std::string read_file(const std::filesystem::path& path);

}  // namespace ats
