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

#include <algorithm>
#include <vector>

#include "nephroscope/local_explain.h"
#include "nephroscope/status.h"
#include "testing/test_util.h"

namespace nephroscope {
namespace {

using testing::LogisticOf;
using testing::MakeDataset;
using testing::RandomRow;
using testing::ToySchema;

TEST(DistanceTest, HandExamples) {
  const FeatureSchema schema = ToySchema(1, 1);
  // Column x0 = {0, 0.5, 1, 1.5, 2}: median 1, MAD 0.5.
  const Dataset reference =
      MakeDataset(schema, {{0, 0}, {0.5, 1}, {1, 0}, {1.5, 1}, {2, 0}});
  const DistanceConfig config;
  const DistanceStats stats = DistanceStats::Fit(reference, config);
  EXPECT_DOUBLE_EQ(stats.scale[0], 0.5);
  EXPECT_FALSE(stats.numeric[1]);
  const std::vector<double> a = {0.0, 0.0};
  const std::vector<double> b = {2.0, 1.0};
  EXPECT_DOUBLE_EQ(Distance(a, b, config, stats), 5.0);
  EXPECT_EQ(Distance(a, a, config, stats), 0.0);
  EXPECT_EQ(Distance(a, std::vector<double>{0.0, 1.0}, config, stats), 1.0);
  DistanceConfig l2 = config;
  l2.norm = DistanceNorm::kL2;
  EXPECT_DOUBLE_EQ(Distance(a, b, l2, stats), std::sqrt(17.0));
}

TEST(DistanceTest, ZeroSpreadFallsBackToOne) {
  const Dataset reference = MakeDataset(ToySchema(2), {{1, 0}, {1, 2}, {1, 4}});
  const DistanceStats stats = DistanceStats::Fit(reference, {});
  EXPECT_EQ(stats.scale[0], 1.0);
  EXPECT_EQ(stats.fallback_features, std::vector<size_t>{0});
  DistanceConfig std_config;
  std_config.numeric_scale = NumericScale::kStd;
  const DistanceStats std_stats = DistanceStats::Fit(reference, std_config);
  EXPECT_NEAR(std_stats.scale[1], std::sqrt(8.0 / 3.0), 1e-15);
}

TEST(PrototypeTest, OnePerSeparatedCluster) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  Rng rng(1);
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 10; ++i) {
      rows.push_back({c * 10.0 + rng.Uniform(), c * 10.0 + rng.Uniform()});
      labels.push_back(0);
    }
  }
  const Dataset data = MakeDataset(ToySchema(2), rows, labels);
  PrototypeOptions options;
  options.m = 2;
  options.epsilon = 3.0;
  const PrototypeSet set = SelectPrototypes(data, LogisticOf({0, 0}, -5), 0.5, options);
  ASSERT_EQ(set.members.size(), 2u);
  EXPECT_NE(set.members[0].index / 10, set.members[1].index / 10);
  EXPECT_EQ(set.members[0].covered_count + set.members[1].covered_count, 20u);
  // Brute force over all pairs: no pair covers more.
  const DistanceStats stats = DistanceStats::Fit(data, options.distance);
  auto ball = [&](size_t i) {
    std::vector<bool> in(rows.size());
    for (size_t j = 0; j < rows.size(); ++j) {
      in[j] = Distance(rows[i], rows[j], options.distance, stats) <= 3.0;
    }
    return in;
  };
  size_t best = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = i + 1; j < rows.size(); ++j) {
      const auto bi = ball(i);
      const auto bj = ball(j);
      size_t covered = 0;
      for (size_t k = 0; k < rows.size(); ++k) covered += bi[k] || bj[k];
      best = std::max(best, covered);
    }
  }
  EXPECT_EQ(set.members[0].covered_count + set.members[1].covered_count, best);
}

TEST(PrototypeTest, SingleClusterPicksTheBestCoveringRecord) {
  Rng rng(2);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 25; ++i) rows.push_back({rng.Normal(0, 1), rng.Normal(0, 1)});
  const Dataset data = MakeDataset(ToySchema(2), rows, std::vector<int>(25, 0));
  PrototypeOptions options;
  options.m = 1;
  options.epsilon = 1.5;
  const PrototypeSet set = SelectPrototypes(data, LogisticOf({0, 0}, -5), 0.5, options);
  ASSERT_EQ(set.members.size(), 1u);
  const DistanceStats stats = DistanceStats::Fit(data, options.distance);
  size_t best_count = 0;
  size_t best_index = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    size_t count = 0;
    for (size_t j = 0; j < rows.size(); ++j) {
      count += Distance(rows[i], rows[j], options.distance, stats) <= 1.5;
    }
    if (count > best_count) {
      best_count = count;
      best_index = i;
    }
  }
  EXPECT_EQ(set.members[0].index, best_index);
  EXPECT_EQ(set.members[0].covered_count, best_count);
  EXPECT_EQ(set.objective_trace, std::vector<double>{static_cast<double>(best_count)});
}

TEST(PrototypeTest, OtherClassPenaltyStopsSelection) {
  // Interleaved classes: every ball holds as many foes as friends.
  const Dataset data = MakeDataset(ToySchema(1), {{0}, {0.1}, {0.2}, {0.3}}, {0, 1, 0, 1});
  PrototypeOptions options;
  options.epsilon = 1.5;  // MAD is 0.1, so neighbours sit at distance 1
  options.other_class_penalty = 2.0;
  const PrototypeSet set = SelectPrototypes(data, LogisticOf({0}, 0), 0.5, options);
  EXPECT_TRUE(set.members.empty());
}

TEST(PrototypeTest, UnlabeledRecordsUsePredictions) {
  const Dataset data = MakeDataset(ToySchema(1), {{0}, {0.05}, {0.9}, {0.95}});
  PrototypeOptions options;
  options.epsilon = 0.2;
  options.m = 5;
  const PrototypeSet set = SelectPrototypes(data, LogisticOf({40}, -20), 0.5, options);
  ASSERT_EQ(set.members.size(), 2u);
  EXPECT_NE(set.members[0].coverage_class, set.members[1].coverage_class);
}

TEST(CounterfactualTest, OnlyOppositeCandidate) {
  const Dataset pool = MakeDataset(ToySchema(1), {{0.1}, {0.9}});
  const Model model = LogisticOf({20}, -10);
  const auto pair = FindCounterfactual(std::vector<double>{0.2}, pool, model, 0.5);
  ASSERT_TRUE(pair.has_value());
  EXPECT_EQ(pair->pool_index, 1u);
  EXPECT_EQ(pair->reference_prediction, Label::kNoCkd);
  EXPECT_EQ(pair->counterfactual_prediction, Label::kCkd);
  ASSERT_EQ(pair->changed_features.size(), 1u);
  EXPECT_EQ(pair->changed_features[0].name, "x0");
}

TEST(CounterfactualTest, NoOppositeRecordIsNotAnException) {
  const Dataset pool = MakeDataset(ToySchema(1), {{0.1}, {0.2}});
  const auto pair = FindCounterfactual(std::vector<double>{0.15}, pool, LogisticOf({1}, -5), 0.5);
  EXPECT_FALSE(pair.has_value());
}

TEST(CounterfactualTest, MatchesExhaustiveScan) {
  Rng rng(3);
  const FeatureSchema schema = ToySchema(3, 2);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 50; ++i) rows.push_back(RandomRow(rng, schema));
    const Dataset pool = MakeDataset(schema, rows);
    const Model model = LogisticOf({3, -2, 1, 1.5, -1}, -0.8);
    const auto reference = RandomRow(rng, schema);
    const auto pair = FindCounterfactual(reference, pool, model, 0.5);
    const int64_t expected = testing::ReferenceCounterfactual(reference, pool, model, 0.5);
    if (expected < 0) {
      EXPECT_FALSE(pair.has_value());
      continue;
    }
    ASSERT_TRUE(pair.has_value());
    EXPECT_EQ(static_cast<int64_t>(pair->pool_index), expected);
    EXPECT_NE(pair->reference_prediction, pair->counterfactual_prediction);
    for (const auto& change : pair->changed_features) {
      EXPECT_NE(change.reference_value, change.counterfactual_value);
    }
  }
}

TEST(CounterfactualTest, ChangesAreReportedInRawUnits) {
  const Dataset imputed = ImputeGroupMean(testing::SyntheticCohortRaw());
  const Dataset scaled = ApplyScaler(imputed, FitScaler(imputed));
  const Model model = Train(ModelKind::kLogistic, scaled, {}, 1);
  // A healthy record from the pool; its counterfactual must predict CKD.
  size_t reference = 0;
  while (model.Predict(scaled.records[reference].values) >= 0.3) ++reference;
  const auto pair = FindCounterfactual(scaled.records[reference].values, scaled, model, 0.3);
  ASSERT_TRUE(pair.has_value());
  EXPECT_EQ(pair->counterfactual_prediction, Label::kCkd);
  for (const auto& change : pair->changed_features) {
    EXPECT_NEAR(change.reference_value, imputed.records[reference].values[change.feature], 1e-9);
    EXPECT_NEAR(change.counterfactual_value,
                imputed.records[pair->pool_index].values[change.feature], 1e-9);
  }
}

}  // namespace
}  // namespace nephroscope
