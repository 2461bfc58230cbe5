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

// Interventional Shapley attributions.
//
// The value of a coalition S is the mean, over background rows b, of the
// model output on the hybrid record that takes features in S from the
// instance and every other feature from b. Tree models are attributed exactly
// with a single pass per (tree, background row): the walk follows the
// instance and the background row together and forks only where they
// disagree on a feature not yet seen on the path. Other models use subset
// enumeration when the feature count allows it, else stratified antithetic
// permutation sampling.

#ifndef NEPHROSCOPE_SHAP_H_
#define NEPHROSCOPE_SHAP_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nephroscope/dataset.h"
#include "nephroscope/model.h"

namespace nephroscope {

inline constexpr size_t kMaxOracleFeatures = 12;
inline constexpr size_t kDefaultBackgroundSize = 128;

struct Attribution {
  double base_value = 0.0;
  std::vector<double> phis;
  // Scaled instance values.
  std::vector<double> instance;
  double prediction = 0.0;
  size_t background_size = 0;
  bool exact = true;
};

struct AttributionOptions {
  // Budget for permutation sampling; spread evenly over background rows.
  size_t permutations = 2000;
  uint64_t seed = 42;
};

using PredictFn = std::function<double(std::span<const double>)>;

Attribution Attribute(const Model& model, std::span<const double> instance,
                      const Dataset& background, const AttributionOptions& options = {});

// Full subset enumeration with weights |S|!(n-|S|-1)!/n!. Throws for more
// than kMaxOracleFeatures features.
Attribution AttributeOracle(const Model& model, std::span<const double> instance,
                            const Dataset& background);
Attribution AttributeOracle(const PredictFn& f, std::span<const double> instance,
                            std::span<const std::vector<double>> background);

// Exact interventional attribution of one tree against one background row;
// phis are accumulated into `phis`. Exposed for tests.
void TreeAttributionAgainst(const DecisionTree& tree, std::span<const double> instance,
                            std::span<const double> reference, double scale,
                            std::span<double> phis);

// Seeded subsample of at most `max_rows` records, in original order.
Dataset SubsampleBackground(const Dataset& train, size_t max_rows = kDefaultBackgroundSize,
                            uint64_t seed = 42);

struct FeatureAttributionSummary {
  std::string feature;
  double mean_abs_phi = 0.0;
  size_t rank = 0;  // 1 = most important
  // (phi, raw feature value) per explained record.
  std::vector<std::pair<double, double>> points;
};

struct GlobalSummary {
  // Schema order.
  std::vector<FeatureAttributionSummary> features;
  // Feature indices by mean |phi| descending; ties by schema order.
  std::vector<size_t> ranking;
  std::vector<int64_t> record_ids;
  std::vector<Attribution> attributions;
};

GlobalSummary ComputeGlobalSummary(const Model& model, const Dataset& explain_set,
                                   const Dataset& background,
                                   const AttributionOptions& options = {});

// Spearman rank correlation with mid-ranks for ties. NaN when either input
// is constant.
double RankCorrelation(std::span<const double> a, std::span<const double> b);

}  // namespace nephroscope

#endif  // NEPHROSCOPE_SHAP_H_
