#include "ats/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>

#include "ats/error.hpp"

namespace ats {

namespace {

void require_pairs(std::size_t a, std::size_t b) {
  if (a != b) throw Error("LengthMismatch", "predictions and golds differ in length");
  if (a == 0) throw Error("EmptyEval", "nothing to evaluate");
}

}  // namespace

double accuracy(std::span<const int> preds, std::span<const int> golds) {
  require_pairs(preds.size(), golds.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == golds[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

PrecisionRecallF1 prf1(std::span<const int> preds, std::span<const int> golds, Averaging averaging) {
  require_pairs(preds.size(), golds.size());
  std::set<int> classes(golds.begin(), golds.end());
  classes.insert(preds.begin(), preds.end());

  auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
  // Harmonic mean; equal inputs return exactly that value.
  auto f1_of = [](double p, double r) {
    if (p == r) return p;
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  };

  double tp_sum = 0.0, fp_sum = 0.0, fn_sum = 0.0;
  double p_sum = 0.0, r_sum = 0.0, f_sum = 0.0;
  for (int c : classes) {
    double tp = 0.0, fp = 0.0, fn = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds[i] == c && golds[i] == c) tp += 1.0;
      else if (preds[i] == c) fp += 1.0;
      else if (golds[i] == c) fn += 1.0;
    }
    tp_sum += tp;
    fp_sum += fp;
    fn_sum += fn;
    const double p = ratio(tp, tp + fp);
    const double r = ratio(tp, tp + fn);
    p_sum += p;
    r_sum += r;
    f_sum += f1_of(p, r);
  }
  if (averaging == Averaging::micro) {
    const double p = ratio(tp_sum, tp_sum + fp_sum);
    const double r = ratio(tp_sum, tp_sum + fn_sum);
    return {p, r, f1_of(p, r)};
  }
  const auto k = static_cast<double>(classes.size());
  return {p_sum / k, r_sum / k, f_sum / k};
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error("LengthMismatch", "sequences differ in length");
  if (xs.size() < 2) throw Error("EmptyEval", "Pearson correlation needs at least two points");
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("ZeroVariance", "a sequence is constant");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double qwk(std::span<const int> preds, std::span<const int> golds, const LabelSpec& spec) {
  require_pairs(preds.size(), golds.size());
  const auto k = static_cast<std::size_t>(spec.size());
  std::vector<std::int64_t> observed(k * k, 0), row(k, 0), col(k, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (int label : {golds[i], preds[i]}) {
      if (!spec.contains(label)) {
        throw Error("LabelOutOfRange", "label " + std::to_string(label) + " outside [" + std::to_string(spec.lo()) +
                                           ", " + std::to_string(spec.hi()) + "]");
      }
    }
    const auto g = static_cast<std::size_t>(golds[i] - spec.lo());
    const auto p = static_cast<std::size_t>(preds[i] - spec.lo());
    ++observed[g * k + p];
    ++row[g];
    ++col[p];
  }
  // With integer weights (i-j)^2 the (K-1)^2 normalizer cancels, and
  // n * sum(w*O) / sum(w * row * col) is an exact ratio of integers.
  const auto n = static_cast<std::int64_t>(preds.size());
  std::int64_t wo = 0, we = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto d = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(j);
      wo += d * d * observed[i * k + j];
      we += d * d * row[i] * col[j];
    }
  }
  if (we == 0) return 1.0;
  return 1.0 - static_cast<double>(n * wo) / static_cast<double>(we);
}

MetricReport evaluate_all(std::span<const Prediction> preds, std::span<const int> golds, TaskKind task,
                          const LabelSpec& spec) {
  require_pairs(preds.size(), golds.size());
  MetricReport report;
  report.count = preds.size();

  std::vector<int> labels;
  std::vector<double> scores, gold_scores;
  labels.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int label = task == TaskKind::regression ? score_to_label(preds[i].score, spec) : preds[i].label;
    labels.push_back(label);
    scores.push_back(task == TaskKind::regression ? preds[i].score : label_to_score(label, spec));
    gold_scores.push_back(label_to_score(golds[i], spec));
  }

  report.values["accuracy"] = accuracy(labels, golds);
  const auto micro = prf1(labels, golds, Averaging::micro);
  const auto macro = prf1(labels, golds, Averaging::macro);
  report.values["precision_micro"] = micro.precision;
  report.values["recall_micro"] = micro.recall;
  report.values["f1_micro"] = micro.f1;
  report.values["precision_macro"] = macro.precision;
  report.values["recall_macro"] = macro.recall;
  report.values["f1_macro"] = macro.f1;
  report.values["qwk"] = qwk(labels, golds, spec);
  try {
    report.values["pearson"] = pearson(scores, gold_scores);
  } catch (const Error& e) {
    if (e.code() != "ZeroVariance" && e.code() != "EmptyEval") throw;
    report.warnings.push_back("pearson omitted: " + e.message());
  }
  return report;
}

}  // namespace ats
