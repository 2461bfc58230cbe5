/*
 * Copyright 2026 The Nephroscope Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "nephroscope/model.h"
#include "nephroscope/parallel.h"
#include "nephroscope/random.h"
#include "nephroscope/status.h"

namespace nephroscope {
namespace {

constexpr char kModule[] = "learners";

double Midpoint(double a, double b) {
  const double mid = a + 0.5 * (b - a);
  // Keep "value <= threshold goes left" exact for adjacent doubles.
  return mid < b ? mid : a;
}

// Per-sample statistics for a split search. Classification uses (y, 1) and
// the Gini criterion; boosting uses (gradient, hessian) and the Newton gain.
enum class Criterion { kGini, kNewton };

class TreeBuilder {
 public:
  TreeBuilder(std::span<const double> features, size_t feature_count,
              std::span<const double> first, std::span<const double> second,
              Criterion criterion, size_t max_depth, size_t min_samples_leaf,
              size_t max_features, double lambda, uint64_t seed)
      : features_(features),
        d_(feature_count),
        first_(first),
        second_(second),
        criterion_(criterion),
        max_depth_(max_depth),
        min_leaf_(std::max<size_t>(1, min_samples_leaf)),
        max_features_(max_features == 0 ? feature_count
                                        : std::min(max_features, feature_count)),
        lambda_(lambda),
        rng_(seed) {}

  DecisionTree Build(std::vector<size_t> samples) {
    DecisionTree tree;
    nodes_ = &tree.nodes;
    Grow(samples, 0);
    return tree;
  }

 private:
  struct Split {
    int32_t feature = -1;
    double threshold = 0.0;
    double score = 0.0;
  };

  double X(size_t sample, size_t feature) const { return features_[sample * d_ + feature]; }

  // Lower is better for both criteria.
  double NodeScore(double sum_first, double sum_second, double count) const {
    if (criterion_ == Criterion::kGini) {
      const double pos = sum_first;
      const double neg = count - pos;
      return count - (pos * pos + neg * neg) / count;
    }
    return -(sum_first * sum_first) / (sum_second + lambda_);
  }

  int32_t MakeLeaf(const std::vector<size_t>& samples) {
    TreeNode leaf;
    double sum_first = 0.0;
    double sum_second = 0.0;
    for (size_t s : samples) {
      sum_first += first_[s];
      sum_second += second_[s];
    }
    if (criterion_ == Criterion::kGini) {
      leaf.positive_count = sum_first;
      leaf.negative_count = static_cast<double>(samples.size()) - sum_first;
      leaf.value = sum_first / static_cast<double>(samples.size());
    } else {
      leaf.value = -sum_first / (sum_second + lambda_);
    }
    nodes_->push_back(leaf);
    return static_cast<int32_t>(nodes_->size() - 1);
  }

  std::vector<size_t> FeatureOrder() {
    std::vector<size_t> order(d_);
    std::iota(order.begin(), order.end(), 0);
    if (max_features_ < d_) rng_.Shuffle(std::span<size_t>(order));
    return order;
  }

  Split FindSplit(const std::vector<size_t>& samples, double parent_score) {
    Split best;
    best.score = parent_score - 1e-12;
    const double n = static_cast<double>(samples.size());
    double total_first = 0.0;
    double total_second = 0.0;
    for (size_t s : samples) {
      total_first += first_[s];
      total_second += second_[s];
    }
    std::vector<std::pair<double, size_t>> sorted(samples.size());
    size_t evaluated = 0;
    for (size_t f : FeatureOrder()) {
      // Beyond max_features, keep looking only until some valid split exists.
      if (evaluated >= max_features_ && best.feature >= 0) break;
      ++evaluated;
      for (size_t i = 0; i < samples.size(); ++i) sorted[i] = {X(samples[i], f), samples[i]};
      std::sort(sorted.begin(), sorted.end());
      double left_first = 0.0;
      double left_second = 0.0;
      for (size_t i = 0; i + 1 < sorted.size(); ++i) {
        left_first += first_[sorted[i].second];
        left_second += second_[sorted[i].second];
        if (sorted[i].first == sorted[i + 1].first) continue;
        const double left_n = static_cast<double>(i + 1);
        const double right_n = n - left_n;
        if (i + 1 < min_leaf_ || sorted.size() - (i + 1) < min_leaf_) continue;
        const double score =
            NodeScore(left_first, left_second, left_n) +
            NodeScore(total_first - left_first, total_second - left_second, right_n);
        if (score < best.score) {
          best.score = score;
          best.feature = static_cast<int32_t>(f);
          best.threshold = Midpoint(sorted[i].first, sorted[i + 1].first);
        }
      }
    }
    return best;
  }

  int32_t Grow(const std::vector<size_t>& samples, size_t depth) {
    const bool depth_exhausted = max_depth_ > 0 && depth >= max_depth_;
    if (depth_exhausted || samples.size() < 2 * min_leaf_) return MakeLeaf(samples);

    double sum_first = 0.0;
    double sum_second = 0.0;
    for (size_t s : samples) {
      sum_first += first_[s];
      sum_second += second_[s];
    }
    const double n = static_cast<double>(samples.size());
    if (criterion_ == Criterion::kGini && (sum_first == 0.0 || sum_first == n)) {
      return MakeLeaf(samples);
    }
    const Split split = FindSplit(samples, NodeScore(sum_first, sum_second, n));
    if (split.feature < 0) return MakeLeaf(samples);

    std::vector<size_t> left;
    std::vector<size_t> right;
    for (size_t s : samples) {
      (X(s, split.feature) <= split.threshold ? left : right).push_back(s);
    }
    const auto index = static_cast<int32_t>(nodes_->size());
    TreeNode node;
    node.feature = split.feature;
    node.threshold = split.threshold;
    nodes_->push_back(node);
    const int32_t left_index = Grow(left, depth + 1);
    const int32_t right_index = Grow(right, depth + 1);
    (*nodes_)[index].left = left_index;
    (*nodes_)[index].right = right_index;
    return index;
  }

  std::span<const double> features_;
  size_t d_;
  std::span<const double> first_;
  std::span<const double> second_;
  Criterion criterion_;
  size_t max_depth_;
  size_t min_leaf_;
  size_t max_features_;
  double lambda_;
  Rng rng_;
  std::vector<TreeNode>* nodes_ = nullptr;
};

struct Matrix {
  std::vector<double> values;
  std::vector<int> labels;
  size_t rows = 0;
  size_t cols = 0;
};

Matrix ToMatrix(const Dataset& dataset) {
  Matrix m;
  m.rows = dataset.size();
  m.cols = dataset.schema.size();
  m.values.reserve(m.rows * m.cols);
  m.labels.reserve(m.rows);
  for (size_t r = 0; r < m.rows; ++r) {
    const auto& record = dataset.records[r];
    if (record.values.size() != m.cols) {
      throw Error(ErrorCode::kSchemaMismatch, kModule,
                  "record " + std::to_string(r) + " does not match the schema width");
    }
    for (double v : record.values) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kInvalidArgument, kModule,
                    "non-finite feature value in record " + std::to_string(r));
      }
      m.values.push_back(v);
    }
    if (!record.label) {
      throw Error(ErrorCode::kInvalidArgument, kModule,
                  "record " + std::to_string(r) + " has no label");
    }
    m.labels.push_back(LabelValue(*record.label));
  }
  return m;
}

double Softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

std::string_view ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLogistic:
      return "logistic";
    case ModelKind::kTree:
      return "tree";
    case ModelKind::kForest:
      return "forest";
    case ModelKind::kBoosted:
      return "boosted";
  }
  return "unknown";
}

std::optional<ModelKind> ParseModelKind(std::string_view name) {
  for (ModelKind kind : {ModelKind::kLogistic, ModelKind::kTree, ModelKind::kForest,
                         ModelKind::kBoosted}) {
    if (name == ModelKindName(kind)) return kind;
  }
  return std::nullopt;
}

double DecisionTree::Predict(std::span<const double> row) const {
  return nodes[LeafIndex(row)].value;
}

size_t DecisionTree::LeafIndex(std::span<const double> row) const {
  size_t index = 0;
  while (!nodes[index].is_leaf()) {
    const TreeNode& node = nodes[index];
    index = row[node.feature] <= node.threshold ? node.left : node.right;
  }
  return index;
}

size_t DecisionTree::Depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<size_t, size_t>> stack = {{0, 0}};
  size_t depth = 0;
  while (!stack.empty()) {
    auto [index, d] = stack.back();
    stack.pop_back();
    depth = std::max(depth, d);
    if (!nodes[index].is_leaf()) {
      stack.push_back({static_cast<size_t>(nodes[index].left), d + 1});
      stack.push_back({static_cast<size_t>(nodes[index].right), d + 1});
    }
  }
  return depth;
}

LearnerParams LearnerParams::Defaults(ModelKind kind) {
  LearnerParams params;
  if (kind == ModelKind::kTree) {
    params.n_trees = 1;
    params.max_depth = 6;
    params.max_features = 0;
    params.bootstrap = false;
  }
  return params;
}

std::vector<std::string> LearnerParams::Names() {
  return {"n_trees",  "max_depth",      "min_samples_leaf", "max_features",
          "bootstrap", "l2",            "max_iterations",   "tolerance",
          "n_rounds", "learning_rate",  "boosted_depth",    "boosted_lambda"};
}

void LearnerParams::Set(std::string_view name, double value) {
  auto count = [&](bool allow_zero) -> size_t {
    if (!(value >= (allow_zero ? 0.0 : 1.0)) || value != std::floor(value)) {
      throw Error(ErrorCode::kInvalidArgument, kModule,
                  "hyperparameter '" + std::string(name) + "' must be a " +
                      (allow_zero ? "non-negative" : "positive") + " integer");
    }
    return static_cast<size_t>(value);
  };
  auto positive = [&]() {
    if (!(value > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, kModule,
                  "hyperparameter '" + std::string(name) + "' must be positive");
    }
    return value;
  };
  if (name == "n_trees") {
    n_trees = count(false);
  } else if (name == "max_depth") {
    max_depth = count(true);
  } else if (name == "min_samples_leaf") {
    min_samples_leaf = count(false);
  } else if (name == "max_features") {
    max_features = count(true);
  } else if (name == "bootstrap") {
    bootstrap = value != 0.0;
  } else if (name == "l2") {
    if (!(value >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, kModule, "l2 must be non-negative");
    }
    l2 = value;
  } else if (name == "max_iterations") {
    max_iterations = count(false);
  } else if (name == "tolerance") {
    tolerance = positive();
  } else if (name == "n_rounds") {
    n_rounds = count(false);
  } else if (name == "learning_rate") {
    learning_rate = positive();
  } else if (name == "boosted_depth") {
    boosted_depth = count(false);
  } else if (name == "boosted_lambda") {
    if (!(value >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, kModule, "boosted_lambda must be non-negative");
    }
    boosted_lambda = value;
  } else {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "unknown hyperparameter '" + std::string(name) + "'");
  }
}

double LearnerParams::Get(std::string_view name) const {
  if (name == "n_trees") return static_cast<double>(n_trees);
  if (name == "max_depth") return static_cast<double>(max_depth);
  if (name == "min_samples_leaf") return static_cast<double>(min_samples_leaf);
  if (name == "max_features") return static_cast<double>(max_features);
  if (name == "bootstrap") return bootstrap ? 1.0 : 0.0;
  if (name == "l2") return l2;
  if (name == "max_iterations") return static_cast<double>(max_iterations);
  if (name == "tolerance") return tolerance;
  if (name == "n_rounds") return static_cast<double>(n_rounds);
  if (name == "learning_rate") return learning_rate;
  if (name == "boosted_depth") return static_cast<double>(boosted_depth);
  if (name == "boosted_lambda") return boosted_lambda;
  throw Error(ErrorCode::kInvalidArgument, kModule,
              "unknown hyperparameter '" + std::string(name) + "'");
}

double ForestModel::Predict(std::span<const double> row) const {
  double sum = 0.0;
  for (const auto& tree : trees) sum += tree.Predict(row);
  return sum / static_cast<double>(trees.size());
}

double LogisticModel::Predict(std::span<const double> row) const {
  double z = intercept;
  for (size_t f = 0; f < weights.size(); ++f) z += weights[f] * row[f];
  return Logistic(z);
}

double BoostedModel::Margin(std::span<const double> row) const {
  double sum = 0.0;
  for (const auto& tree : trees) sum += tree.Predict(row);
  return base_score + learning_rate * sum;
}

double BoostedModel::Predict(std::span<const double> row) const {
  return Logistic(Margin(row));
}

Model::Model(ModelKind kind, size_t feature_count, Impl impl)
    : kind_(kind), feature_count_(feature_count), impl_(std::move(impl)) {
  const bool tree_kind = kind == ModelKind::kTree || kind == ModelKind::kForest;
  if (tree_kind != std::holds_alternative<ForestModel>(impl_) ||
      (kind == ModelKind::kLogistic) != std::holds_alternative<LogisticModel>(impl_)) {
    throw Error(ErrorCode::kInternal, kModule, "model kind does not match its parameters");
  }
}

double Model::Predict(std::span<const double> row) const {
  return std::visit([&](const auto& m) { return m.Predict(row); }, impl_);
}

size_t Model::Size() const {
  if (const auto* f = forest()) {
    size_t n = 0;
    for (const auto& tree : f->trees) n += tree.nodes.size();
    return n;
  }
  if (const auto* b = boosted()) {
    size_t n = 0;
    for (const auto& tree : b->trees) n += tree.nodes.size();
    return n;
  }
  const auto* l = logistic();
  return 1 + static_cast<size_t>(std::count_if(l->weights.begin(), l->weights.end(),
                                                [](double w) { return w != 0.0; }));
}

double PredictProba(const Model& model, const PatientRecord& record) {
  if (record.values.size() != model.feature_count()) {
    throw Error(ErrorCode::kSchemaMismatch, kModule,
                "record has " + std::to_string(record.values.size()) +
                    " values, model expects " + std::to_string(model.feature_count()));
  }
  for (size_t f = 0; f < record.values.size(); ++f) {
    if (!std::isfinite(record.values[f])) {
      throw Error(ErrorCode::kInvalidArgument, kModule,
                  "feature " + std::to_string(f) + " is missing or non-finite");
    }
  }
  return model.Predict(record.values);
}

std::vector<double> PredictAll(const Model& model, const Dataset& dataset) {
  std::vector<double> out;
  out.reserve(dataset.size());
  for (const auto& record : dataset.records) out.push_back(PredictProba(model, record));
  return out;
}

DecisionTree FitClassificationTree(std::span<const double> features,
                                   size_t feature_count, std::span<const int> labels,
                                   std::span<const size_t> samples,
                                   const LearnerParams& params, uint64_t seed) {
  std::vector<double> y(labels.begin(), labels.end());
  std::vector<double> ones(labels.size(), 1.0);
  TreeBuilder builder(features, feature_count, y, ones, Criterion::kGini,
                      params.max_depth, params.min_samples_leaf, params.max_features,
                      0.0, seed);
  return builder.Build(std::vector<size_t>(samples.begin(), samples.end()));
}

LogisticModel FitLogistic(std::span<const double> features, size_t feature_count,
                          std::span<const int> labels, const LearnerParams& params) {
  const size_t n = labels.size();
  const size_t d = feature_count;
  LogisticModel model;
  model.weights.assign(d, 0.0);
  model.l2 = params.l2;

  // Step 1/L with L bounding the gradient's Lipschitz constant guarantees a
  // non-increasing loss.
  double mean_sq_norm = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double sq = 1.0;
    for (size_t f = 0; f < d; ++f) sq += features[i * d + f] * features[i * d + f];
    mean_sq_norm += sq;
  }
  mean_sq_norm /= static_cast<double>(n);
  const double step = 1.0 / (0.25 * mean_sq_norm + params.l2);

  auto loss_and_gradient = [&](std::vector<double>* grad_w, double* grad_b) {
    double loss = 0.0;
    if (grad_w) std::fill(grad_w->begin(), grad_w->end(), 0.0);
    if (grad_b) *grad_b = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double* x = &features[i * d];
      double z = model.intercept;
      for (size_t f = 0; f < d; ++f) z += model.weights[f] * x[f];
      loss += labels[i] == 1 ? Softplus(-z) : Softplus(z);
      if (grad_w) {
        const double residual = Logistic(z) - labels[i];
        for (size_t f = 0; f < d; ++f) (*grad_w)[f] += residual * x[f];
        *grad_b += residual;
      }
    }
    double penalty = 0.0;
    for (double w : model.weights) penalty += w * w;
    if (grad_w) {
      for (size_t f = 0; f < d; ++f) {
        (*grad_w)[f] = (*grad_w)[f] / static_cast<double>(n) + params.l2 * model.weights[f];
      }
      *grad_b /= static_cast<double>(n);
    }
    return loss / static_cast<double>(n) + 0.5 * params.l2 * penalty;
  };

  std::vector<double> grad_w(d);
  double grad_b = 0.0;
  double loss = loss_and_gradient(&grad_w, &grad_b);
  model.loss_trace.push_back(loss);
  for (size_t iteration = 0; iteration < params.max_iterations; ++iteration) {
    for (size_t f = 0; f < d; ++f) model.weights[f] -= step * grad_w[f];
    model.intercept -= step * grad_b;
    const double next = loss_and_gradient(&grad_w, &grad_b);
    model.loss_trace.push_back(next);
    const bool converged = std::abs(loss - next) < params.tolerance;
    loss = next;
    if (converged) break;
  }
  return model;
}

Model Train(ModelKind kind, const Dataset& train, const LearnerParams& params,
            uint64_t seed, std::vector<std::string>* warnings) {
  if (train.empty()) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "cannot train on an empty dataset");
  }
  if (train.provenance != Provenance::kScaled &&
      train.provenance != Provenance::kResampled) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "training data must be scaled or resampled, got provenance '" +
                    std::string(ProvenanceName(train.provenance)) + "'");
  }
  const Matrix m = ToMatrix(train);
  const ClassCounts counts = train.CountClasses();
  if ((counts.positive == 0 || counts.negative == 0) && warnings != nullptr) {
    warnings->push_back(std::string(kModule) +
                        ": single-class training set; model degenerates to a constant");
  }

  switch (kind) {
    case ModelKind::kLogistic: {
      LogisticModel logistic = FitLogistic(m.values, m.cols, m.labels, params);
      return Model(kind, m.cols, std::move(logistic));
    }
    case ModelKind::kTree:
    case ModelKind::kForest: {
      LearnerParams effective = params;
      if (kind == ModelKind::kTree) {
        effective.n_trees = 1;
        effective.bootstrap = false;
      }
      ForestModel forest;
      forest.params = effective;
      forest.seed = seed;
      forest.trees.resize(effective.n_trees);
      ParallelFor(effective.n_trees, [&](size_t t) {
        const uint64_t tree_seed = seed + t;
        std::vector<size_t> samples(m.rows);
        if (effective.bootstrap) {
          Rng rng(MixSeed(tree_seed, 0xb007));
          for (auto& s : samples) s = rng.UniformInt(m.rows);
        } else {
          std::iota(samples.begin(), samples.end(), 0);
        }
        forest.trees[t] = FitClassificationTree(m.values, m.cols, m.labels, samples,
                                                effective, tree_seed);
      });
      return Model(kind, m.cols, std::move(forest));
    }
    case ModelKind::kBoosted: {
      BoostedModel boosted;
      boosted.learning_rate = params.learning_rate;
      const double mean = std::clamp(
          static_cast<double>(counts.positive) / static_cast<double>(m.rows), 1e-6,
          1.0 - 1e-6);
      boosted.base_score = std::log(mean / (1.0 - mean));
      std::vector<double> margin(m.rows, boosted.base_score);
      std::vector<double> gradient(m.rows);
      std::vector<double> hessian(m.rows);
      std::vector<size_t> all(m.rows);
      std::iota(all.begin(), all.end(), 0);
      for (size_t round = 0; round < params.n_rounds; ++round) {
        for (size_t i = 0; i < m.rows; ++i) {
          const double p = Logistic(margin[i]);
          gradient[i] = p - m.labels[i];
          hessian[i] = p * (1.0 - p);
        }
        TreeBuilder builder(m.values, m.cols, gradient, hessian, Criterion::kNewton,
                            params.boosted_depth, params.min_samples_leaf, 0,
                            params.boosted_lambda, seed + round);
        DecisionTree tree = builder.Build(all);
        for (size_t i = 0; i < m.rows; ++i) {
          margin[i] += params.learning_rate *
                       tree.Predict(std::span<const double>(&m.values[i * m.cols], m.cols));
        }
        boosted.trees.push_back(std::move(tree));
      }
      return Model(kind, m.cols, std::move(boosted));
    }
  }
  throw Error(ErrorCode::kInternal, kModule, "unknown model kind");
}

}  // namespace nephroscope
