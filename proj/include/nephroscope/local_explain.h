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

// Prototypes and dataset-drawn counterfactuals.

#ifndef NEPHROSCOPE_LOCAL_EXPLAIN_H_
#define NEPHROSCOPE_LOCAL_EXPLAIN_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nephroscope/dataset.h"
#include "nephroscope/model.h"

namespace nephroscope {

enum class NumericScale { kMad, kStd };
enum class DistanceNorm { kL1, kL2 };

struct DistanceConfig {
  NumericScale numeric_scale = NumericScale::kMad;
  double categorical_mismatch_cost = 1.0;
  DistanceNorm norm = DistanceNorm::kL1;
};

std::string_view NumericScaleName(NumericScale scale);
std::string_view DistanceNormName(DistanceNorm norm);

// Per-feature denominators computed on a reference dataset. MAD is the
// unscaled median absolute deviation from the median; std is the population
// standard deviation. Binary features are compared by mismatch instead.
struct DistanceStats {
  std::vector<double> scale;
  std::vector<bool> numeric;
  // Numeric features whose spread was zero and fell back to 1.0.
  std::vector<size_t> fallback_features;

  static DistanceStats Fit(const Dataset& reference, const DistanceConfig& config);
};

// L1: sum |a-b|/s + cost * mismatches.
// L2: sqrt(sum ((a-b)/s)^2 + cost^2 * mismatches).
double Distance(std::span<const double> a, std::span<const double> b,
                const DistanceConfig& config, const DistanceStats& stats);

struct Prototype {
  size_t index = 0;  // position in the dataset
  int64_t id = -1;
  // Class used for coverage: the label, or the prediction for unlabeled rows.
  Label coverage_class = Label::kNoCkd;
  Label predicted_class = Label::kNoCkd;
  double probability = 0.0;
  size_t covered_count = 0;
  std::vector<size_t> covered;  // dataset positions newly covered
};

struct PrototypeSet {
  std::vector<Prototype> members;
  double epsilon = 0.0;
  // Greedy gain of every accepted step.
  std::vector<double> objective_trace;
};

struct PrototypeOptions {
  size_t m = 10;
  // Defaults to the epsilon_quantile of pairwise distances over a seeded
  // subsample of epsilon_sample records.
  std::optional<double> epsilon;
  double epsilon_quantile = 0.15;
  size_t epsilon_sample = 200;
  double other_class_penalty = 1.0;
  uint64_t seed = 42;
  DistanceConfig distance;
};

double DefaultEpsilon(const Dataset& dataset, const DistanceConfig& config,
                      const DistanceStats& stats, double quantile, size_t sample,
                      uint64_t seed);

// Greedy set cover: each step adds the record whose epsilon-ball covers the
// most uncovered same-class records minus the penalty per other-class record
// in the ball. Stops at m members or when no gain is positive. Ties go to the
// lowest index.
PrototypeSet SelectPrototypes(const Dataset& dataset, const Model& model, double threshold,
                              const PrototypeOptions& options = {});

struct FeatureChange {
  size_t feature = 0;
  std::string name;
  // Raw units when the pool carries a scaler, else the pool's units.
  double reference_value = 0.0;
  double counterfactual_value = 0.0;
};

struct CounterfactualPair {
  std::vector<double> reference;  // scaled
  PatientRecord counterfactual;   // scaled, as stored in the pool
  size_t pool_index = 0;
  double distance = 0.0;
  Label reference_prediction = Label::kNoCkd;
  Label counterfactual_prediction = Label::kNoCkd;
  double reference_probability = 0.0;
  double counterfactual_probability = 0.0;
  std::vector<FeatureChange> changed_features;
};

// Nearest pool record whose thresholded prediction differs from the
// reference's; ties go to the lowest pool index. std::nullopt when no pool
// record has the opposite prediction.
std::optional<CounterfactualPair> FindCounterfactual(std::span<const double> reference,
                                                     const Dataset& pool, const Model& model,
                                                     double threshold,
                                                     const DistanceConfig& config,
                                                     const DistanceStats& stats);
std::optional<CounterfactualPair> FindCounterfactual(std::span<const double> reference,
                                                     const Dataset& pool, const Model& model,
                                                     double threshold,
                                                     const DistanceConfig& config = {});

}  // namespace nephroscope

#endif  // NEPHROSCOPE_LOCAL_EXPLAIN_H_
