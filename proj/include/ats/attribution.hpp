#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ats/profiler.hpp"

namespace ats {

// Occlusion is one prediction per token; longer texts are refused.
inline constexpr std::size_t kMaxOcclusionTokens = 2000;

// Attribution target: the score for regression, the probability of the
// predicted class for classification.
struct TokenAttribution {
  TokenList tokens;
  std::vector<double> deltas;  // base_score minus the target with token i deleted
  double base_score = 0.0;
  int label = 0;
};

struct FeatureAttribution {
  std::vector<std::string> names;
  std::vector<double> contributions;
  double base_score = 0.0;
  // Linear models only: contributions + bias == base_score.
  std::optional<double> bias;
};

TokenAttribution attribute_tokens(const Profiler& p, std::string_view text);

// Linear models: weight times standardized feature, in score units.
// Other models: change in the target when a feature is replaced by its
// training mean.
FeatureAttribution attribute_features(const Profiler& p, std::string_view text);

}  // namespace ats
