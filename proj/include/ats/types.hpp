#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ats {

enum class TaskKind { regression, classification };

std::string_view to_string(TaskKind task);
TaskKind parse_task_kind(std::string_view name);

// Contiguous integer label range [lo, hi] with at least two labels.
class LabelSpec {
 public:
  LabelSpec(int lo, int hi);

  int lo() const { return lo_; }
  int hi() const { return hi_; }
  int size() const { return hi_ - lo_ + 1; }
  bool contains(int label) const { return label >= lo_ && label <= hi_; }

  friend bool operator==(const LabelSpec&, const LabelSpec&) = default;

 private:
  int lo_;
  int hi_;
};

struct Instance {
  std::string id;
  std::string text;
  std::optional<int> label;
  std::optional<std::string> context;
};

struct Dataset {
  std::vector<Instance> instances;
  LabelSpec label_spec{0, 1};
  std::string name;

  std::size_t size() const { return instances.size(); }
  bool empty() const { return instances.empty(); }
};

// Checks the Dataset invariants: unique ids, non-blank text, labels inside
// label_spec. Throws ats::Error on the first violation.
void validate(const Dataset& ds);

struct Prediction {
  double score = 0.0;
  int label = 0;
  std::optional<std::vector<double>> probs;
};

// Converter between continuous scores and ordinal labels.
//
// score_to_label rounds half away from zero and clamps into the spec, so
// regression overshoot maps to the nearest end of the scale.
int score_to_label(double score, const LabelSpec& spec);
double label_to_score(int label, const LabelSpec& spec);
double normalize_score(double score, const LabelSpec& spec);
double denormalize_score(double y01, const LabelSpec& spec);

}  // namespace ats
