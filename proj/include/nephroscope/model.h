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

// Candidate classifiers. All models consume scaled feature rows and return
// the probability of CKD.

#ifndef NEPHROSCOPE_MODEL_H_
#define NEPHROSCOPE_MODEL_H_

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nephroscope/dataset.h"

namespace nephroscope {

enum class ModelKind { kLogistic, kTree, kForest, kBoosted };

std::string_view ModelKindName(ModelKind kind);
std::optional<ModelKind> ParseModelKind(std::string_view name);

struct TreeNode {
  // -1 marks a leaf.
  int32_t feature = -1;
  // A row goes left iff value <= threshold. Binary features split at 0.5.
  double threshold = 0.0;
  int32_t left = -1;
  int32_t right = -1;
  // Leaf output: CKD frequency for classification trees, additive log-odds
  // increment for boosting trees.
  double value = 0.0;
  // Leaf class counts at fit time (classification trees only).
  double negative_count = 0.0;
  double positive_count = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  // nodes[0] is the root.
  std::vector<TreeNode> nodes;

  double Predict(std::span<const double> row) const;
  size_t LeafIndex(std::span<const double> row) const;
  size_t Depth() const;
};

// Hyperparameters for every learner kind. Grid cells override fields by name
// through Set().
struct LearnerParams {
  // Trees and forests.
  size_t n_trees = 300;
  size_t max_depth = 0;  // 0 = unlimited
  size_t min_samples_leaf = 2;
  size_t max_features = 5;  // 0 = all features
  bool bootstrap = true;
  // Logistic regression.
  double l2 = 1e-3;
  size_t max_iterations = 10000;
  double tolerance = 1e-8;
  // Gradient boosting.
  size_t n_rounds = 200;
  double learning_rate = 0.1;
  size_t boosted_depth = 3;
  double boosted_lambda = 1.0;

  static LearnerParams Defaults(ModelKind kind);
  // Throws Error(kInvalidArgument) for unknown names or invalid values.
  void Set(std::string_view name, double value);
  static std::vector<std::string> Names();
  double Get(std::string_view name) const;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  LearnerParams params;
  uint64_t seed = 0;
  bool oob_available = false;

  // Arithmetic mean of per-tree leaf probabilities.
  double Predict(std::span<const double> row) const;
};

struct LogisticModel {
  std::vector<double> weights;
  double intercept = 0.0;
  double l2 = 0.0;
  // Penalized training loss per iteration; not persisted.
  std::vector<double> loss_trace;

  double Predict(std::span<const double> row) const;
};

struct BoostedModel {
  std::vector<DecisionTree> trees;
  double learning_rate = 0.1;
  double base_score = 0.0;  // log-odds

  double Margin(std::span<const double> row) const;
  double Predict(std::span<const double> row) const;
};

class Model {
 public:
  using Impl = std::variant<ForestModel, LogisticModel, BoostedModel>;

  Model(ModelKind kind, size_t feature_count, Impl impl);

  ModelKind kind() const { return kind_; }
  size_t feature_count() const { return feature_count_; }
  const Impl& impl() const { return impl_; }

  // Unchecked fast path; `row` must hold feature_count() finite values.
  double Predict(std::span<const double> row) const;

  // Tree-structured classifiers (kTree, kForest) expose their forest.
  const ForestModel* forest() const { return std::get_if<ForestModel>(&impl_); }
  const LogisticModel* logistic() const { return std::get_if<LogisticModel>(&impl_); }
  const BoostedModel* boosted() const { return std::get_if<BoostedModel>(&impl_); }

  // Complexity used for grid-search tie-breaks: node count for tree models,
  // non-zero coefficients plus intercept for logistic regression.
  size_t Size() const;

 private:
  ModelKind kind_;
  size_t feature_count_;
  Impl impl_;
};

// Validates the record (size, no missing values) before predicting.
double PredictProba(const Model& model, const PatientRecord& record);
std::vector<double> PredictAll(const Model& model, const Dataset& dataset);

inline double Logistic(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// Trains a model on scaled (optionally resampled) data. Deterministic for a
// fixed seed; forest tree t uses seed + t. A single-class training set yields
// constant tree/forest models and a warning.
Model Train(ModelKind kind, const Dataset& train, const LearnerParams& params,
            uint64_t seed, std::vector<std::string>* warnings = nullptr);

// Building blocks, exposed for tests.
DecisionTree FitClassificationTree(std::span<const double> features,
                                   size_t feature_count,
                                   std::span<const int> labels,
                                   std::span<const size_t> samples,
                                   const LearnerParams& params, uint64_t seed);
LogisticModel FitLogistic(std::span<const double> features, size_t feature_count,
                          std::span<const int> labels, const LearnerParams& params);

}  // namespace nephroscope

#endif  // NEPHROSCOPE_MODEL_H_
