#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ats/matrix.hpp"
#include <json.hpp>

namespace ats {

// ---------------------------------------------------------------------------
// Ridge regression
// ---------------------------------------------------------------------------

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  double lambda = 0.0;
};

// Minimizes sum (y - Xw - b)^2 + lambda * |w|^2 with an unpenalized bias,
// via a Cholesky solve of the normal equations on centered data.
LinearModel ridge_fit(const Matrix& x, std::span<const double> y, double lambda);
double ridge_predict(const LinearModel& m, std::span<const double> x);

// ---------------------------------------------------------------------------
// Multinomial logistic regression
// ---------------------------------------------------------------------------

struct LogisticHyper {
  double lr = 0.1;
  int epochs = 2000;
  double l2 = 1e-4;
};

struct LogisticModel {
  Matrix weights;  // classes x features
  std::vector<double> biases;

  std::size_t classes() const { return biases.size(); }
};

struct LogisticObjective {
  double loss = 0.0;
  Matrix grad_weights;
  std::vector<double> grad_biases;
};

// Mean cross-entropy plus l2/2 * |W|^2 (biases unpenalized) and its
// analytic gradient.
LogisticObjective logistic_objective(const Matrix& x, std::span<const int> labels, const Matrix& weights,
                                     std::span<const double> biases, double l2);

// Full-batch gradient descent from all-zero parameters. Labels lie in
// [0, num_classes).
LogisticModel logistic_fit(const Matrix& x, std::span<const int> labels, int num_classes,
                           const LogisticHyper& hyper);
std::vector<double> logistic_predict_proba(const LogisticModel& m, std::span<const double> x);

// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);
// Index of the largest entry; the lowest index wins ties.
int argmax(std::span<const double> values);

// ---------------------------------------------------------------------------
// Random forest (CART trees on bootstrap samples)
// ---------------------------------------------------------------------------

enum class ForestMode { regression, classification };

struct ForestConfig {
  ForestMode mode = ForestMode::regression;
  int n_estimators = 100;
  int max_depth = 5;
  std::uint64_t seed = 42;
  int min_samples_split = 2;
  int features_per_split = 0;  // 0: max(1, d/3) regression, max(1, sqrt(d)) classification
  int num_classes = 0;         // classification only
  bool bootstrap = true;
  int n_threads = 1;           // 0: one per hardware thread
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;          // regression leaf payload
  std::vector<double> counts;  // classification leaf payload

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(std::span<const double> x) const;
  int depth() const;
};

struct Forest {
  ForestConfig config;
  std::size_t num_features = 0;
  std::vector<Tree> trees;
};

int default_features_per_split(ForestMode mode, std::size_t dims);

// Tree t draws its bootstrap sample and feature subsets from its own
// SplitMix64 stream seeded with seed + t, so the result does not depend on
// how many threads build trees.
Forest forest_fit(const Matrix& x, std::span<const double> targets, const ForestConfig& cfg);

// Regression: mean of the tree outputs.
double forest_predict(const Forest& f, std::span<const double> x);
// Classification: mean of the per-tree normalized class counts.
std::vector<double> forest_predict_proba(const Forest& f, std::span<const double> x);

// ---------------------------------------------------------------------------
// model.json encodings
// ---------------------------------------------------------------------------

nlohmann::json to_json(const LinearModel& m);
nlohmann::json to_json(const LogisticModel& m);
nlohmann::json to_json(const Forest& f);
LinearModel linear_from_json(const nlohmann::json& j);
LogisticModel logistic_from_json(const nlohmann::json& j);
Forest forest_from_json(const nlohmann::json& j);

}  // namespace ats
