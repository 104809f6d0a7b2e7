#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "ats/types.hpp"

namespace ats {

enum class Averaging { micro, macro };

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

double accuracy(std::span<const int> preds, std::span<const int> golds);

// Per-class counts; macro averages over the classes present in golds or
// preds. Zero-denominator precision/recall count as 0.
PrecisionRecallF1 prf1(std::span<const int> preds, std::span<const int> golds, Averaging averaging);

double pearson(std::span<const double> xs, std::span<const double> ys);

// Quadratic weighted kappa with gold rows and predicted columns. Returns 1
// when the expected disagreement is zero (both sequences the same constant).
double qwk(std::span<const int> preds, std::span<const int> golds, const LabelSpec& spec);

// Reporting order used by the CLI.
inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {
      "accuracy",  "precision_micro", "recall_micro", "f1_micro", "precision_macro",
      "recall_macro", "f1_macro",     "pearson",      "qwk"};
  return names;
}

struct MetricReport {
  std::map<std::string, double> values;
  std::size_t count = 0;
  std::vector<std::string> warnings;

  bool has(const std::string& name) const { return values.count(name) > 0; }
};

// Regression: Pearson on raw scores, classification metrics on converted
// labels. Classification: classification metrics, Pearson on the labels'
// score embedding. A zero-variance Pearson becomes a warning, not an error.
MetricReport evaluate_all(std::span<const Prediction> preds, std::span<const int> golds, TaskKind task,
                          const LabelSpec& spec);

}  // namespace ats
