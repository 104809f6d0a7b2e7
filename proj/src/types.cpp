#include "ats/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_set>

#include "ats/error.hpp"

namespace ats {

namespace {

void require_finite(double v) {
  if (!std::isfinite(v)) throw Error("NonFiniteScore", "score is not a finite number");
}

bool is_blank(std::string_view s) {
  for (unsigned char c : s) {
    if (!std::isspace(c)) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(TaskKind task) {
  return task == TaskKind::regression ? "regression" : "classification";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "regression") return TaskKind::regression;
  if (name == "classification") return TaskKind::classification;
  throw Error("UnknownType", "task must be 'regression' or 'classification', got '" +
                                 std::string(name) + "'");
}

LabelSpec::LabelSpec(int lo, int hi) : lo_(lo), hi_(hi) {
  if (lo >= hi) {
    throw Error("BadLabelSpec", "label range [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "] needs at least two labels");
  }
}

void validate(const Dataset& ds) {
  std::unordered_set<std::string> ids;
  for (const auto& inst : ds.instances) {
    if (!ids.insert(inst.id).second) throw Error("DuplicateId", "instance id '" + inst.id + "' repeated");
    if (is_blank(inst.text)) throw Error("EmptyText", "instance '" + inst.id + "' has blank text");
    if (inst.label && !ds.label_spec.contains(*inst.label)) {
      throw Error("LabelOutOfRange", "instance '" + inst.id + "' label " +
                                         std::to_string(*inst.label) + " outside [" +
                                         std::to_string(ds.label_spec.lo()) + ", " +
                                         std::to_string(ds.label_spec.hi()) + "]");
    }
  }
}

int score_to_label(double score, const LabelSpec& spec) {
  require_finite(score);
  // std::round is half-away-from-zero; clamp before the int cast so huge
  // scores cannot overflow.
  const double r = std::round(score);
  if (r <= spec.lo()) return spec.lo();
  if (r >= spec.hi()) return spec.hi();
  return static_cast<int>(r);
}

double label_to_score(int label, const LabelSpec& spec) {
  if (!spec.contains(label)) {
    throw Error("LabelOutOfRange", "label " + std::to_string(label) + " outside [" +
                                       std::to_string(spec.lo()) + ", " +
                                       std::to_string(spec.hi()) + "]");
  }
  return static_cast<double>(label);
}

double normalize_score(double score, const LabelSpec& spec) {
  require_finite(score);
  const double y = (score - spec.lo()) / static_cast<double>(spec.hi() - spec.lo());
  return std::clamp(y, 0.0, 1.0);
}

double denormalize_score(double y01, const LabelSpec& spec) {
  require_finite(y01);
  return spec.lo() + y01 * static_cast<double>(spec.hi() - spec.lo());
}

}  // namespace ats
