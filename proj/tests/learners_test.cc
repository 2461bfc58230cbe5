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


#include <gtest/gtest.h>

#include <cstring>
#include <numeric>
#include <vector>

#include "nephroscope/dataset.h"
#include "nephroscope/evaluation.h"
#include "nephroscope/model.h"
#include "nephroscope/model_io.h"
#include "nephroscope/status.h"
#include "testing/test_util.h"

namespace nephroscope {
namespace {

using testing::ForestOf;
using testing::Leaf;
using testing::LogisticOf;
using testing::MakeDataset;
using testing::Stump;
using testing::ToySchema;

double Gini(size_t pos, size_t n) {
  if (n == 0) return 0.0;
  const double p = static_cast<double>(pos) / n;
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

TEST(TreeTest, DepthOneSplitLandsInTheGap) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x;
    std::vector<int> y;
    for (int i = 0; i < 15; ++i) {
      x.push_back(-rng.Uniform() * 10.0 - 0.01);
      y.push_back(0);
    }
    for (int i = 0; i < 9; ++i) {
      x.push_back(rng.Uniform() * 10.0 + 0.01);
      y.push_back(1);
    }
    LearnerParams params;
    params.max_depth = 1;
    params.min_samples_leaf = 1;
    params.max_features = 0;
    std::vector<size_t> samples(x.size());
    std::iota(samples.begin(), samples.end(), 0);
    const DecisionTree tree = FitClassificationTree(x, 1, y, samples, params, 1);
    ASSERT_FALSE(tree.nodes[0].is_leaf());
    const double t = tree.nodes[0].threshold;
    double max_neg = -1e9;
    double min_pos = 1e9;
    for (size_t i = 0; i < x.size(); ++i) {
      if (y[i]) {
        min_pos = std::min(min_pos, x[i]);
      } else {
        max_neg = std::max(max_neg, x[i]);
      }
    }
    EXPECT_GE(t, max_neg);
    EXPECT_LT(t, min_pos);
    // Brute force: no candidate cut has lower weighted Gini than the learned one.
    auto impurity = [&](double cut) {
      size_t ln = 0, lp = 0, rn = 0, rp = 0;
      for (size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= cut) {
          ++ln;
          lp += y[i];
        } else {
          ++rn;
          rp += y[i];
        }
      }
      return ln * Gini(lp, ln) + rn * Gini(rp, rn);
    };
    for (double cut : x) EXPECT_LE(impurity(t), impurity(cut) + 1e-12);
    EXPECT_EQ(tree.Predict(std::vector<double>{max_neg}), 0.0);
    EXPECT_EQ(tree.Predict(std::vector<double>{min_pos}), 1.0);
  }
}

TEST(TreeTest, LeafFrequency) {
  DecisionTree tree;
  TreeNode leaf;
  leaf.negative_count = 3;
  leaf.positive_count = 1;
  leaf.value = leaf.positive_count / (leaf.negative_count + leaf.positive_count);
  tree.nodes = {leaf};
  EXPECT_EQ(tree.Predict(std::vector<double>{0.3, 0.9}), 0.25);
  EXPECT_EQ(tree.Depth(), 0u);
}

TEST(TreeTest, StumpRouting) {
  const DecisionTree tree = Stump(1, 0.5, 0.2, 0.8);
  EXPECT_EQ(tree.Predict(std::vector<double>{0.9, 0.5}), 0.2);
  EXPECT_EQ(tree.Predict(std::vector<double>{0.0, 0.51}), 0.8);
  EXPECT_EQ(tree.Depth(), 1u);
}

TEST(ModelTest, ZeroLogisticIsOneHalf) {
  const Model model = LogisticOf({0.0, 0.0, 0.0}, 0.0);
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    const std::vector<double> row = {rng.Uniform(), rng.Uniform(), rng.Uniform()};
    EXPECT_EQ(model.Predict(row), 0.5);
  }
}

TEST(ModelTest, ForestAveragesTrees) {
  const Model forest = ForestOf({Stump(0, 0.5, 0.2, 0.2), Stump(0, 0.5, 0.6, 0.6)}, 1);
  EXPECT_DOUBLE_EQ(forest.Predict(std::vector<double>{0.1}), 0.4);
}

TEST(ModelTest, IdenticalTreesMatchSingleTree) {
  Rng rng(4);
  const DecisionTree tree = testing::RandomTree(rng, 4, 4);
  const Model forest = ForestOf(std::vector<DecisionTree>(7, tree), 4);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> row = {rng.Uniform(), rng.Uniform(), rng.Uniform(), rng.Uniform()};
    EXPECT_DOUBLE_EQ(forest.Predict(row), tree.Predict(row));
  }
}

TEST(ModelTest, UnbootstrappedForestOnOneFeatureMatchesTree) {
  Rng rng(8);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    rows.push_back({rng.Uniform()});
    labels.push_back(rng.Bernoulli(rows.back()[0]) ? 1 : 0);
  }
  const Dataset data = MakeDataset(ToySchema(1), rows, labels);
  LearnerParams params;
  params.n_trees = 5;
  params.bootstrap = false;
  params.max_features = 0;
  const Model forest = Train(ModelKind::kForest, data, params, 1);
  const Model tree = Train(ModelKind::kTree, data, params, 1);
  for (double v = 0.0; v <= 1.0; v += 0.01) {
    const std::vector<double> row = {v};
    EXPECT_DOUBLE_EQ(forest.Predict(row), tree.Predict(row));
  }
}

Dataset SingleClass(int label) {
  Rng rng(2);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 20; ++i) rows.push_back({rng.Uniform(), rng.Uniform()});
  return MakeDataset(ToySchema(2), rows, std::vector<int>(20, label));
}

TEST(ModelTest, SingleClassTrainingIsConstant) {
  for (int label : {0, 1}) {
    const Dataset data = SingleClass(label);
    std::vector<std::string> warnings;
    const Model tree = Train(ModelKind::kTree, data, {}, 1, &warnings);
    EXPECT_FALSE(warnings.empty());
    LearnerParams params;
    params.n_trees = 10;
    const Model forest = Train(ModelKind::kForest, data, params, 1);
    const Model logistic = Train(ModelKind::kLogistic, data, {}, 1);
    for (const auto& record : data.records) {
      EXPECT_EQ(tree.Predict(record.values), label);
      EXPECT_EQ(forest.Predict(record.values), label);
      if (label == 1) {
        EXPECT_GT(logistic.Predict(record.values), 0.99);
      } else {
        EXPECT_LT(logistic.Predict(record.values), 0.01);
      }
    }
  }
}

TEST(ModelTest, LogisticLossIsMonotone) {
  Rng rng(5);
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    const double a = rng.Uniform();
    const double b = rng.Uniform();
    x.push_back(a);
    x.push_back(b);
    y.push_back(rng.Bernoulli(Logistic(4 * a - 3 * b)) ? 1 : 0);
  }
  LearnerParams params;
  params.l2 = 1e-3;
  const LogisticModel model = FitLogistic(x, 2, y, params);
  ASSERT_GT(model.loss_trace.size(), 1u);
  for (size_t i = 1; i < model.loss_trace.size(); ++i) {
    EXPECT_LE(model.loss_trace[i], model.loss_trace[i - 1] + 1e-12);
  }
  EXPECT_GT(model.weights[0], 0.0);
  EXPECT_LT(model.weights[1], 0.0);
}

TEST(ModelTest, EveryKindLearnsAPlantedSignal) {
  Rng rng(6);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  const FeatureSchema schema = ToySchema(3, 1);
  for (int i = 0; i < 300; ++i) {
    rows.push_back(testing::RandomRow(rng, schema));
    const auto& r = rows.back();
    labels.push_back(rng.Bernoulli(Logistic(6 * r[0] - 3 + 1.5 * r[3] - 0.75)) ? 1 : 0);
  }
  const Dataset data = MakeDataset(schema, rows, labels);
  for (ModelKind kind :
       {ModelKind::kLogistic, ModelKind::kTree, ModelKind::kForest, ModelKind::kBoosted}) {
    LearnerParams params = LearnerParams::Defaults(kind);
    params.n_trees = 50;
    params.max_depth = 4;
    const Model model = Train(kind, data, params, 3);
    const auto scores = PredictAll(model, data);
    for (double s : scores) {
      EXPECT_GE(s, 0.0);
      EXPECT_LE(s, 1.0);
    }
    EXPECT_GT(RocAuc(scores, LabelsOf(data)), 0.75) << ModelKindName(kind);
  }
}

TEST(ModelTest, ForestTrainingIsDeterministic) {
  const Dataset imputed = ImputeGroupMean(testing::SyntheticCohortRaw());
  const Dataset scaled = ApplyScaler(imputed, FitScaler(imputed));
  LearnerParams params;
  params.n_trees = 20;
  const Model a = Train(ModelKind::kForest, scaled, params, 9);
  const Model b = Train(ModelKind::kForest, scaled, params, 9);
  for (const auto& record : scaled.records) {
    EXPECT_EQ(a.Predict(record.values), b.Predict(record.values));
  }
}

TEST(ModelTest, PredictProbaValidatesRecords) {
  const Model model = LogisticOf({1.0, 1.0}, 0.0);
  PatientRecord record;
  record.values = {0.1};
  EXPECT_THROW(PredictProba(model, record), Error);
  record.values = {0.1, kMissing};
  EXPECT_THROW(PredictProba(model, record), Error);
}

TEST(LearnerParamsTest, SetAndGetByName) {
  LearnerParams params;
  params.Set("max_features", 3);
  EXPECT_EQ(params.max_features, 3u);
  EXPECT_EQ(params.Get("max_features"), 3.0);
  params.Set("l2", 0.5);
  EXPECT_EQ(params.Get("l2"), 0.5);
  EXPECT_THROW(params.Set("no_such_param", 1), Error);
  EXPECT_THROW(params.Set("learning_rate", -1), Error);
  for (const auto& name : LearnerParams::Names()) EXPECT_NO_THROW(params.Get(name));
}

TEST(ModelIoTest, RoundTripIsBitExact) {
  const Dataset imputed = ImputeGroupMean(testing::SyntheticCohortRaw());
  const ScalerParams scaler = FitScaler(imputed);
  const Dataset scaled = ApplyScaler(imputed, scaler);
  for (ModelKind kind :
       {ModelKind::kLogistic, ModelKind::kTree, ModelKind::kForest, ModelKind::kBoosted}) {
    LearnerParams params = LearnerParams::Defaults(kind);
    params.n_trees = 10;
    params.n_rounds = 20;
    ModelBundle bundle{CkdSchema(), scaler, Train(kind, scaled, params, 4), 0.37, "floor:0.6",
                       {scaled.records[0].values, scaled.records[1].values}, "champion", "abc"};
    testing::TempDir dir;
    const auto path = dir.path() / "model.json";
    SaveBundle(bundle, path);
    const ModelBundle loaded = LoadBundle(path);
    EXPECT_EQ(loaded.model.kind(), kind);
    EXPECT_EQ(loaded.threshold, 0.37);
    EXPECT_EQ(loaded.scaler, scaler);
    EXPECT_EQ(loaded.background, bundle.background);
    EXPECT_EQ(SerializeBundle(loaded), SerializeBundle(bundle));
    EXPECT_EQ(BundleDigest(loaded), BundleDigest(bundle));
    for (const auto& record : scaled.records) {
      const double a = bundle.model.Predict(record.values);
      const double b = loaded.model.Predict(record.values);
      EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
    }
  }
}

TEST(ModelIoTest, RejectsForeignDocuments) {
  EXPECT_THROW(DeserializeBundle("{}"), Error);
  EXPECT_THROW(DeserializeBundle("not json"), Error);
  EXPECT_THROW(LoadBundle("/nonexistent/model.json"), Error);
}

}  // namespace
}  // namespace nephroscope
