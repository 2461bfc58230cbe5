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

#include "testing/test_util.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <chrono>
#include <functional>

#include "nephroscope/synthetic.h"

#ifndef NEPHROSCOPE_SOURCE_DIR
#error "NEPHROSCOPE_SOURCE_DIR must be defined"
#endif

namespace nephroscope::testing {

FeatureSchema ToySchema(size_t numeric, size_t binary) {
  std::vector<FeatureSpec> specs;
  for (size_t i = 0; i < numeric; ++i) {
    FeatureSpec spec;
    spec.name = "x" + std::to_string(i);
    specs.push_back(spec);
  }
  for (size_t i = 0; i < binary; ++i) {
    FeatureSpec spec;
    spec.name = "b" + std::to_string(i);
    spec.kind = FeatureKind::kBinary;
    specs.push_back(spec);
  }
  return FeatureSchema(std::move(specs));
}

Dataset MakeDataset(const FeatureSchema& schema, const std::vector<std::vector<double>>& rows,
                    const std::vector<int>& labels) {
  Dataset data(schema);
  data.provenance = Provenance::kScaled;
  for (size_t i = 0; i < rows.size(); ++i) {
    PatientRecord record;
    record.values = rows[i];
    record.id = static_cast<int64_t>(i);
    if (!labels.empty()) record.label = labels[i] ? Label::kCkd : Label::kNoCkd;
    data.records.push_back(std::move(record));
  }
  return data;
}

std::vector<double> RandomRow(Rng& rng, const FeatureSchema& schema) {
  std::vector<double> row(schema.size());
  for (size_t f = 0; f < schema.size(); ++f) {
    row[f] = schema.spec(f).is_binary() ? (rng.Bernoulli(0.5) ? 1.0 : 0.0) : rng.Uniform();
  }
  return row;
}

TreeNode Leaf(double value) {
  TreeNode node;
  node.value = value;
  node.positive_count = value * 10.0;
  node.negative_count = (1.0 - value) * 10.0;
  return node;
}

DecisionTree Stump(size_t feature, double threshold, double left, double right) {
  DecisionTree tree;
  TreeNode root;
  root.feature = static_cast<int32_t>(feature);
  root.threshold = threshold;
  root.left = 1;
  root.right = 2;
  tree.nodes = {root, Leaf(left), Leaf(right)};
  return tree;
}

DecisionTree RandomTree(Rng& rng, size_t feature_count, size_t max_depth,
                        double leaf_probability) {
  DecisionTree tree;
  std::function<int32_t(size_t)> grow = [&](size_t depth) -> int32_t {
    const auto index = static_cast<int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (depth == max_depth || (depth > 0 && rng.Bernoulli(leaf_probability))) {
      tree.nodes[index] = Leaf(rng.Uniform());
      return index;
    }
    TreeNode node;
    node.feature = static_cast<int32_t>(rng.UniformInt(feature_count));
    node.threshold = 0.1 + 0.8 * rng.Uniform();
    const int32_t left = grow(depth + 1);
    const int32_t right = grow(depth + 1);
    node.left = left;
    node.right = right;
    tree.nodes[index] = node;
    return index;
  };
  grow(0);
  return tree;
}

Model ForestOf(std::vector<DecisionTree> trees, size_t feature_count) {
  ForestModel forest;
  forest.trees = std::move(trees);
  return Model(ModelKind::kForest, feature_count, std::move(forest));
}

Model TreeModel(DecisionTree tree, size_t feature_count) {
  ForestModel forest;
  forest.trees.push_back(std::move(tree));
  return Model(ModelKind::kTree, feature_count, std::move(forest));
}

Model LogisticOf(std::vector<double> weights, double intercept) {
  LogisticModel logistic;
  const size_t n = weights.size();
  logistic.weights = std::move(weights);
  logistic.intercept = intercept;
  return Model(ModelKind::kLogistic, n, std::move(logistic));
}

std::vector<double> ReferenceShapley(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> instance,
                                     const std::vector<std::vector<double>>& background,
                                     double* base) {
  const size_t n = instance.size();
  auto coalition_value = [&](uint64_t mask) {
    double sum = 0.0;
    std::vector<double> hybrid(n);
    for (const auto& row : background) {
      for (size_t j = 0; j < n; ++j) hybrid[j] = (mask >> j) & 1u ? instance[j] : row[j];
      sum += f(hybrid);
    }
    return sum / static_cast<double>(background.size());
  };
  std::vector<double> value(uint64_t{1} << n);
  for (uint64_t mask = 0; mask < value.size(); ++mask) value[mask] = coalition_value(mask);
  std::vector<double> factorial(n + 1, 1.0);
  for (size_t k = 1; k <= n; ++k) factorial[k] = factorial[k - 1] * static_cast<double>(k);
  std::vector<double> phis(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (uint64_t mask = 0; mask < value.size(); ++mask) {
      if ((mask >> i) & 1u) continue;
      const size_t s = static_cast<size_t>(__builtin_popcountll(mask));
      const double weight = factorial[s] * factorial[n - s - 1] / factorial[n];
      phis[i] += weight * (value[mask | (uint64_t{1} << i)] - value[mask]);
    }
  }
  if (base != nullptr) *base = value[0];
  return phis;
}

namespace {

double MedianOf(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

int64_t ReferenceCounterfactual(std::span<const double> reference, const Dataset& pool,
                                const Model& model, double threshold) {
  const size_t d = pool.schema.size();
  std::vector<double> mad(d, 1.0);
  for (size_t f = 0; f < d; ++f) {
    if (pool.schema.spec(f).is_binary()) continue;
    std::vector<double> column;
    for (const auto& r : pool.records) column.push_back(r.values[f]);
    const double median = MedianOf(column);
    for (double& v : column) v = std::fabs(v - median);
    const double m = MedianOf(column);
    if (m > 0.0) mad[f] = m;
  }
  const bool reference_positive = model.Predict(reference) >= threshold;
  int64_t best = -1;
  double best_distance = 0.0;
  for (size_t i = 0; i < pool.size(); ++i) {
    const auto& row = pool.records[i].values;
    if ((model.Predict(row) >= threshold) == reference_positive) continue;
    double dist = 0.0;
    for (size_t f = 0; f < d; ++f) {
      dist += pool.schema.spec(f).is_binary() ? (row[f] != reference[f] ? 1.0 : 0.0)
                                              : std::fabs(row[f] - reference[f]) / mad[f];
    }
    if (best < 0 || dist < best_distance) {
      best = static_cast<int64_t>(i);
      best_distance = dist;
    }
  }
  return best;
}

std::vector<std::vector<double>> RowsOf(const Dataset& dataset) {
  std::vector<std::vector<double>> rows;
  for (const auto& record : dataset.records) rows.push_back(record.values);
  return rows;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  path_ = std::filesystem::temp_directory_path() /
          ("nephroscope-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

const Dataset& SyntheticCohortRaw() {
  static const Dataset cohort = GenerateSynthetic().dataset;
  return cohort;
}

const TrainResult& SyntheticTraining() {
  static const TrainResult result =
      RunTraining(SyntheticCohortRaw(), PipelineConfig::Defaults(), "synthetic");
  return result;
}

std::filesystem::path DataDir() { return std::filesystem::path(NEPHROSCOPE_SOURCE_DIR) / "data"; }

}  // namespace nephroscope::testing
