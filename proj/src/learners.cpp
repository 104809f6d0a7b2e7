#include "ats/learners.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <numeric>
#include <thread>

#include "ats/error.hpp"
#include "ats/random.hpp"

namespace ats {

namespace {

void require_dims(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw Error("DimMismatch", "expected " + std::to_string(expected) + " features, got " + std::to_string(got));
  }
}

void require_finite(const Matrix& x) {
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw Error("NonFiniteInput", "training matrix contains a non-finite value");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Ridge
// ---------------------------------------------------------------------------

LinearModel ridge_fit(const Matrix& x, std::span<const double> y, double lambda) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n == 0) throw Error("EmptyTrainingSet", "ridge needs at least one row");
  if (y.size() != n) throw Error("LengthMismatch", "targets and rows differ in length");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error("BadParam", "lambda must be a finite value >= 0");
  require_finite(x);
  for (double v : y) {
    if (!std::isfinite(v)) throw Error("NonFiniteInput", "targets contain a non-finite value");
  }

  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> xm(
      x.data().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const Eigen::Map<const VectorXd> ym(y.data(), static_cast<Eigen::Index>(n));

  const VectorXd x_mean = xm.colwise().mean();
  const double y_mean = ym.mean();
  const MatrixXd xc = xm.rowwise() - x_mean.transpose();
  const VectorXd yc = ym.array() - y_mean;

  MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += lambda;
  const VectorXd rhs = xc.transpose() * yc;

  Eigen::LLT<MatrixXd> llt(gram);
  bool singular = llt.info() != Eigen::Success;
  if (!singular && d > 0) {
    // LLT happily factors numerically rank-deficient matrices; treat a
    // vanishing pivot relative to the largest diagonal entry as singular.
    const VectorXd pivots = MatrixXd(llt.matrixL()).diagonal();
    const double max_diag = gram.diagonal().maxCoeff();
    const double min_pivot = pivots.minCoeff();
    singular = max_diag <= 0.0 || min_pivot * min_pivot <= 1e-12 * max_diag;
  }
  if (singular) {
    throw Error("SingularSystem", "normal equations are singular; use a ridge penalty lambda > 0");
  }
  const VectorXd w = llt.solve(rhs);

  LinearModel m;
  m.weights.assign(w.data(), w.data() + w.size());
  m.bias = y_mean - x_mean.dot(w);
  m.lambda = lambda;
  return m;
}

double ridge_predict(const LinearModel& m, std::span<const double> x) {
  require_dims(m.weights.size(), x.size());
  double s = m.bias;
  for (std::size_t j = 0; j < x.size(); ++j) s += m.weights[j] * x[j];
  return s;
}

// ---------------------------------------------------------------------------
// Logistic
// ---------------------------------------------------------------------------

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (auto& v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : p) v /= sum;
  return p;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  }
  return best;
}

namespace {

std::vector<double> logits_of(const Matrix& w, std::span<const double> b, std::span<const double> x) {
  std::vector<double> z(b.begin(), b.end());
  for (std::size_t k = 0; k < z.size(); ++k) {
    const auto row = w.row(k);
    for (std::size_t j = 0; j < x.size(); ++j) z[k] += row[j] * x[j];
  }
  return z;
}

}  // namespace

LogisticObjective logistic_objective(const Matrix& x, std::span<const int> labels, const Matrix& weights,
                                     std::span<const double> biases, double l2) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t k_classes = biases.size();
  LogisticObjective out{0.0, Matrix(k_classes, d), std::vector<double>(k_classes, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    const auto z = logits_of(weights, biases, xi);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    const auto y = static_cast<std::size_t>(labels[i]);
    out.loss += lse - z[y];
    for (std::size_t k = 0; k < k_classes; ++k) {
      const double r = std::exp(z[k] - lse) - (k == y ? 1.0 : 0.0);
      out.grad_biases[k] += r;
      auto g = out.grad_weights.row(k);
      for (std::size_t j = 0; j < d; ++j) g[j] += r * xi[j];
    }
  }
  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  out.loss *= inv_n;
  for (auto& g : out.grad_biases) g *= inv_n;
  double sq = 0.0;
  for (std::size_t k = 0; k < k_classes; ++k) {
    auto g = out.grad_weights.row(k);
    const auto w = weights.row(k);
    for (std::size_t j = 0; j < d; ++j) {
      g[j] = g[j] * inv_n + l2 * w[j];
      sq += w[j] * w[j];
    }
  }
  out.loss += 0.5 * l2 * sq;
  return out;
}

LogisticModel logistic_fit(const Matrix& x, std::span<const int> labels, int num_classes,
                           const LogisticHyper& hyper) {
  const std::size_t n = x.rows();
  if (n == 0) throw Error("EmptyTrainingSet", "logistic regression needs at least one row");
  if (labels.size() != n) throw Error("LengthMismatch", "labels and rows differ in length");
  if (num_classes < 2) throw Error("BadParam", "logistic regression needs at least two classes");
  if (!(hyper.lr > 0.0) || hyper.epochs < 0 || !(hyper.l2 >= 0.0)) {
    throw Error("BadParam", "logistic hyperparameters need lr > 0, epochs >= 0, l2 >= 0");
  }
  require_finite(x);
  std::vector<bool> seen(static_cast<std::size_t>(num_classes), false);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw Error("LabelOutOfRange", "class index " + std::to_string(y));
    seen[static_cast<std::size_t>(y)] = true;
  }
  for (int k = 0; k < num_classes; ++k) {
    if (!seen[static_cast<std::size_t>(k)]) {
      std::cerr << "warning: class index " << k << " absent from the training labels\n";
    }
  }

  LogisticModel m{Matrix(static_cast<std::size_t>(num_classes), x.cols()),
                  std::vector<double>(static_cast<std::size_t>(num_classes), 0.0)};
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const auto obj = logistic_objective(x, labels, m.weights, m.biases, hyper.l2);
    if (!std::isfinite(obj.loss)) {
      throw Error("Diverged", "loss became non-finite at epoch " + std::to_string(epoch) +
                                  "; lower the learning rate");
    }
    for (std::size_t k = 0; k < m.biases.size(); ++k) {
      m.biases[k] -= hyper.lr * obj.grad_biases[k];
      auto w = m.weights.row(k);
      const auto g = obj.grad_weights.row(k);
      for (std::size_t j = 0; j < w.size(); ++j) w[j] -= hyper.lr * g[j];
    }
  }
  for (double v : m.weights.data()) {
    if (!std::isfinite(v)) throw Error("Diverged", "weights became non-finite; lower the learning rate");
  }
  return m;
}

std::vector<double> logistic_predict_proba(const LogisticModel& m, std::span<const double> x) {
  require_dims(m.weights.cols(), x.size());
  return softmax(logits_of(m.weights, m.biases, x));
}

// ---------------------------------------------------------------------------
// Forest
// ---------------------------------------------------------------------------

int default_features_per_split(ForestMode mode, std::size_t dims) {
  const auto d = static_cast<double>(dims);
  const double m = mode == ForestMode::regression ? std::floor(d / 3.0) : std::floor(std::sqrt(d));
  return std::max(1, static_cast<int>(m));
}

const TreeNode& Tree::leaf_for(std::span<const double> x) const {
  std::size_t at = 0;
  while (!nodes[at].is_leaf()) {
    const auto& node = nodes[at];
    at = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                               : node.right);
  }
  return nodes[at];
}

int Tree::depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int best = 0;
  // Children always follow their parent in the node array.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, depth[i]);
    if (!nodes[i].is_leaf()) {
      depth[static_cast<std::size_t>(nodes[i].left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(nodes[i].right)] = depth[i] + 1;
    }
  }
  return best;
}

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> targets, const ForestConfig& cfg, int features_per_split,
              std::uint64_t seed)
      : x_(x), y_(targets), cfg_(cfg), m_(features_per_split), rng_(seed) {}

  Tree build() {
    const std::size_t n = x_.rows();
    std::vector<std::size_t> sample(n);
    if (cfg_.bootstrap) {
      for (auto& s : sample) s = static_cast<std::size_t>(rng_.below(n));
    } else {
      std::iota(sample.begin(), sample.end(), std::size_t{0});
    }
    grow(std::move(sample), 0);
    return std::move(tree_);
  }

 private:
  bool classification() const { return cfg_.mode == ForestMode::classification; }

  TreeNode make_leaf(const std::vector<std::size_t>& idx) const {
    TreeNode leaf;
    if (classification()) {
      leaf.counts.assign(static_cast<std::size_t>(cfg_.num_classes), 0.0);
      for (auto i : idx) leaf.counts[static_cast<std::size_t>(y_[i])] += 1.0;
    } else {
      double sum = 0.0;
      for (auto i : idx) sum += y_[i];
      leaf.value = sum / static_cast<double>(idx.size());
    }
    return leaf;
  }

  bool pure(const std::vector<std::size_t>& idx) const {
    for (auto i : idx) {
      if (y_[i] != y_[idx.front()]) return false;
    }
    return true;
  }

  std::vector<int> sample_features() {
    std::vector<int> all(x_.cols());
    std::iota(all.begin(), all.end(), 0);
    const auto m = std::min(all.size(), static_cast<std::size_t>(m_));
    // Partial Fisher-Yates: the first m slots become a uniform subset.
    for (std::size_t i = 0; i < m; ++i) {
      const auto j = i + static_cast<std::size_t>(rng_.below(all.size() - i));
      std::swap(all[i], all[j]);
    }
    all.resize(m);
    std::sort(all.begin(), all.end());
    return all;
  }

  // Weighted child impurity scaled by the node size: total squared error
  // for regression, n * Gini summed over both children for classification.
  SplitChoice best_split(const std::vector<std::size_t>& idx) {
    SplitChoice best;
    const std::size_t n = idx.size();
    const std::size_t k_classes = classification() ? static_cast<std::size_t>(cfg_.num_classes) : 0;
    std::vector<std::pair<double, double>> column(n);  // (feature value, target)
    std::vector<double> left_counts(k_classes), right_counts(k_classes);

    for (int f : sample_features()) {
      for (std::size_t r = 0; r < n; ++r) {
        column[r] = {x_(idx[r], static_cast<std::size_t>(f)), y_[idx[r]]};
      }
      std::sort(column.begin(), column.end());

      double total_sum = 0.0, total_sq = 0.0;
      std::fill(right_counts.begin(), right_counts.end(), 0.0);
      std::fill(left_counts.begin(), left_counts.end(), 0.0);
      for (const auto& [v, t] : column) {
        total_sum += t;
        total_sq += t * t;
        if (classification()) right_counts[static_cast<std::size_t>(t)] += 1.0;
      }
      double left_sum = 0.0, left_sq = 0.0;
      for (std::size_t k = 1; k < n; ++k) {
        const double t = column[k - 1].second;
        left_sum += t;
        left_sq += t * t;
        if (classification()) {
          left_counts[static_cast<std::size_t>(t)] += 1.0;
          right_counts[static_cast<std::size_t>(t)] -= 1.0;
        }
        const double lo = column[k - 1].first;
        const double hi = column[k].first;
        if (!(lo < hi)) continue;

        const auto nl = static_cast<double>(k);
        const auto nr = static_cast<double>(n - k);
        double impurity = 0.0;
        if (classification()) {
          double gl = 0.0, gr = 0.0;
          for (std::size_t c = 0; c < k_classes; ++c) {
            gl += left_counts[c] * left_counts[c];
            gr += right_counts[c] * right_counts[c];
          }
          impurity = (nl - gl / nl) + (nr - gr / nr);
        } else {
          const double right_sum = total_sum - left_sum;
          const double right_sq = total_sq - left_sq;
          impurity = (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
        }
        // Strict comparison keeps the lowest feature index, then the lowest
        // threshold, among equal-impurity candidates.
        if (best.feature < 0 || impurity < best.impurity) {
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold < hi)) threshold = lo;
          best = {f, threshold, impurity};
        }
      }
    }
    return best;
  }

  int grow(std::vector<std::size_t> idx, int depth) {
    const auto at = static_cast<int>(tree_.nodes.size());
    const bool stop = depth >= cfg_.max_depth || static_cast<int>(idx.size()) < cfg_.min_samples_split || pure(idx);
    SplitChoice split;
    if (!stop) split = best_split(idx);
    if (split.feature < 0) {
      tree_.nodes.push_back(make_leaf(idx));
      return at;
    }

    tree_.nodes.emplace_back();
    std::vector<std::size_t> left, right;
    for (auto i : idx) {
      (x_(i, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(at)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return at;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const ForestConfig& cfg_;
  int m_;
  SplitMix64 rng_;
  Tree tree_;
};

}  // namespace

Forest forest_fit(const Matrix& x, std::span<const double> targets, const ForestConfig& cfg) {
  const std::size_t n = x.rows();
  if (n == 0) throw Error("EmptyTrainingSet", "random forest needs at least one row");
  if (targets.size() != n) throw Error("LengthMismatch", "targets and rows differ in length");
  if (cfg.n_estimators < 1 || cfg.max_depth < 0 || cfg.min_samples_split < 2 || cfg.features_per_split < 0) {
    throw Error("BadParam", "forest needs n_estimators >= 1, max_depth >= 0, min_samples_split >= 2");
  }
  require_finite(x);
  if (cfg.mode == ForestMode::classification) {
    if (cfg.num_classes < 2) throw Error("BadParam", "classification forest needs num_classes >= 2");
    for (double t : targets) {
      if (t != std::floor(t) || t < 0 || t >= cfg.num_classes) {
        throw Error("LabelOutOfRange", "class index " + std::to_string(t) + " outside [0, num_classes)");
      }
    }
  } else {
    for (double t : targets) {
      if (!std::isfinite(t)) throw Error("NonFiniteInput", "targets contain a non-finite value");
    }
  }

  Forest forest;
  forest.config = cfg;
  forest.num_features = x.cols();
  if (forest.config.features_per_split == 0) {
    forest.config.features_per_split = default_features_per_split(cfg.mode, x.cols());
  }
  forest.trees.resize(static_cast<std::size_t>(cfg.n_estimators));

  auto build_one = [&](std::size_t t) {
    TreeBuilder builder(x, targets, forest.config, forest.config.features_per_split, cfg.seed + t);
    forest.trees[t] = builder.build();
  };

  unsigned workers = cfg.n_threads > 0 ? static_cast<unsigned>(cfg.n_threads) : std::thread::hardware_concurrency();
  workers = std::clamp(workers, 1u, static_cast<unsigned>(cfg.n_estimators));
  if (workers == 1) {
    for (std::size_t t = 0; t < forest.trees.size(); ++t) build_one(t);
    return forest;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t t = next++; t < forest.trees.size(); t = next++) build_one(t);
    });
  }
  for (auto& th : pool) th.join();
  return forest;
}

double forest_predict(const Forest& f, std::span<const double> x) {
  if (f.config.mode != ForestMode::regression) throw Error("TaskModelMismatch", "forest is a classifier");
  require_dims(f.num_features, x.size());
  double sum = 0.0;
  for (const auto& tree : f.trees) sum += tree.leaf_for(x).value;
  return sum / static_cast<double>(f.trees.size());
}

std::vector<double> forest_predict_proba(const Forest& f, std::span<const double> x) {
  if (f.config.mode != ForestMode::classification) throw Error("TaskModelMismatch", "forest is a regressor");
  require_dims(f.num_features, x.size());
  std::vector<double> probs(static_cast<std::size_t>(f.config.num_classes), 0.0);
  for (const auto& tree : f.trees) {
    const auto& counts = tree.leaf_for(x).counts;
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    for (std::size_t k = 0; k < probs.size(); ++k) probs[k] += counts[k] / total;
  }
  for (auto& p : probs) p /= static_cast<double>(f.trees.size());
  return probs;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

using nlohmann::json;

json to_json(const LinearModel& m) {
  return {{"type", "ridge"}, {"weights", m.weights}, {"bias", m.bias}, {"lambda", m.lambda}};
}

json to_json(const LogisticModel& m) {
  json rows = json::array();
  for (std::size_t k = 0; k < m.weights.rows(); ++k) {
    const auto r = m.weights.row(k);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"type", "logistic"}, {"weights", rows}, {"biases", m.biases}};
}

json to_json(const Forest& f) {
  const auto& c = f.config;
  json trees = json::array();
  for (const auto& tree : f.trees) {
    json nodes = json::array();
    for (const auto& node : tree.nodes) {
      if (!node.is_leaf()) {
        nodes.push_back({{"feature", node.feature}, {"threshold", node.threshold}, {"left", node.left},
                         {"right", node.right}});
      } else if (c.mode == ForestMode::classification) {
        nodes.push_back({{"counts", node.counts}});
      } else {
        nodes.push_back({{"value", node.value}});
      }
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  return {{"type", "random_forest"},
          {"mode", c.mode == ForestMode::regression ? "regression" : "classification"},
          {"n_estimators", c.n_estimators},
          {"max_depth", c.max_depth},
          {"seed", c.seed},
          {"min_samples_split", c.min_samples_split},
          {"features_per_split", c.features_per_split},
          {"num_classes", c.num_classes},
          {"bootstrap", c.bootstrap},
          {"num_features", f.num_features},
          {"trees", std::move(trees)}};
}

namespace {

void expect_type(const json& j, const char* type) {
  if (!j.is_object() || j.value("type", "") != type) {
    throw Error("CorruptArtifact", std::string("model.json is not a ") + type + " model");
  }
}

}  // namespace

LinearModel linear_from_json(const json& j) {
  expect_type(j, "ridge");
  try {
    return {j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>(), j.at("lambda").get<double>()};
  } catch (const json::exception& e) {
    throw Error("CorruptArtifact", std::string("ridge model: ") + e.what());
  }
}

LogisticModel logistic_from_json(const json& j) {
  expect_type(j, "logistic");
  try {
    const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
    LogisticModel m{Matrix::from_rows(rows), j.at("biases").get<std::vector<double>>()};
    if (m.weights.rows() != m.biases.size() || m.biases.size() < 2) {
      throw Error("CorruptArtifact", "logistic weights and biases disagree on the class count");
    }
    return m;
  } catch (const json::exception& e) {
    throw Error("CorruptArtifact", std::string("logistic model: ") + e.what());
  }
}

Forest forest_from_json(const json& j) {
  expect_type(j, "random_forest");
  try {
    Forest f;
    auto& c = f.config;
    c.mode = j.at("mode").get<std::string>() == "classification" ? ForestMode::classification : ForestMode::regression;
    c.n_estimators = j.at("n_estimators").get<int>();
    c.max_depth = j.at("max_depth").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.min_samples_split = j.at("min_samples_split").get<int>();
    c.features_per_split = j.at("features_per_split").get<int>();
    c.num_classes = j.at("num_classes").get<int>();
    c.bootstrap = j.at("bootstrap").get<bool>();
    f.num_features = j.at("num_features").get<std::size_t>();
    for (const auto& jt : j.at("trees")) {
      Tree tree;
      for (const auto& jn : jt.at("nodes")) {
        TreeNode node;
        if (jn.contains("feature")) {
          node.feature = jn.at("feature").get<int>();
          node.threshold = jn.at("threshold").get<double>();
          node.left = jn.at("left").get<int>();
          node.right = jn.at("right").get<int>();
        } else if (jn.contains("counts")) {
          node.counts = jn.at("counts").get<std::vector<double>>();
        } else {
          node.value = jn.at("value").get<double>();
        }
        tree.nodes.push_back(std::move(node));
      }
      const auto count = static_cast<int>(tree.nodes.size());
      for (int i = 0; i < count; ++i) {
        const auto& node = tree.nodes[static_cast<std::size_t>(i)];
        if (!node.is_leaf() && (node.left <= i || node.right <= i || node.left >= count || node.right >= count)) {
          throw Error("CorruptArtifact", "tree node has out-of-order children");
        }
        if (!node.is_leaf() && static_cast<std::size_t>(node.feature) >= f.num_features) {
          throw Error("CorruptArtifact", "tree node splits on a feature outside the model");
        }
        if (node.is_leaf() && c.mode == ForestMode::classification &&
            (node.counts.size() != static_cast<std::size_t>(c.num_classes) ||
             !(std::accumulate(node.counts.begin(), node.counts.end(), 0.0) > 0.0))) {
          throw Error("CorruptArtifact", "classification leaf has malformed class counts");
        }
      }
      if (tree.nodes.empty()) throw Error("CorruptArtifact", "empty tree");
      f.trees.push_back(std::move(tree));
    }
    if (static_cast<int>(f.trees.size()) != c.n_estimators) {
      throw Error("CorruptArtifact", "tree count disagrees with n_estimators");
    }
    return f;
  } catch (const json::exception& e) {
    throw Error("CorruptArtifact", std::string("forest model: ") + e.what());
  }
}

}  // namespace ats
