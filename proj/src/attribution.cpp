#include "ats/attribution.hpp"

#include "ats/error.hpp"

namespace ats {

namespace {

double target_of(const Profiler& p, const Prediction& pred, int label) {
  if (p.task() == TaskKind::regression) return pred.score;
  return (*pred.probs)[static_cast<std::size_t>(label - p.label_spec().lo())];
}

}  // namespace

TokenAttribution attribute_tokens(const Profiler& p, std::string_view text) {
  TokenAttribution out;
  out.tokens = p.pipeline().tokenizer()(text);
  if (out.tokens.empty()) throw Error("NoTokens", "text has no tokens to occlude");
  if (out.tokens.size() > kMaxOcclusionTokens) {
    throw Error("TooManyTokens", std::to_string(out.tokens.size()) + " tokens exceed the occlusion limit of " +
                                     std::to_string(kMaxOcclusionTokens));
  }
  const Prediction base = p.predict_tokens(out.tokens);
  out.label = base.label;
  out.base_score = target_of(p, base, base.label);
  out.deltas.reserve(out.tokens.size());

  TokenList occluded;
  occluded.reserve(out.tokens.size());
  for (std::size_t i = 0; i < out.tokens.size(); ++i) {
    occluded.assign(out.tokens.begin(), out.tokens.end());
    occluded.erase(occluded.begin() + static_cast<std::ptrdiff_t>(i));
    out.deltas.push_back(out.base_score - target_of(p, p.predict_tokens(occluded), base.label));
  }
  return out;
}

FeatureAttribution attribute_features(const Profiler& p, std::string_view text) {
  const auto tokens = p.pipeline().tokenizer()(text);
  const auto raw = p.pipeline().raw_features(tokens);
  const Prediction base = p.predict_raw_features(raw);

  FeatureAttribution out;
  out.names = p.pipeline().feature_names();

  if (const auto* linear = std::get_if<LinearModel>(&p.model())) {
    const auto& spec = p.label_spec();
    const double scale = p.output_normalized() ? static_cast<double>(spec.hi() - spec.lo()) : 1.0;
    const double offset = p.output_normalized() ? static_cast<double>(spec.lo()) : 0.0;
    const auto x = p.pipeline().extract_tokens(tokens).values;
    for (std::size_t j = 0; j < x.size(); ++j) out.contributions.push_back(linear->weights[j] * x[j] * scale);
    out.bias = offset + linear->bias * scale;
    out.base_score = base.score;
    return out;
  }

  out.base_score = target_of(p, base, base.label);
  const auto& means = p.pipeline().train_means();
  for (std::size_t j = 0; j < raw.size(); ++j) {
    auto ablated = raw;
    ablated[j] = means[j];
    out.contributions.push_back(out.base_score - target_of(p, p.predict_raw_features(ablated), base.label));
  }
  return out;
}

}  // namespace ats
