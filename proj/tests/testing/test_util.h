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

// Fixtures shared by the unit, integration and acceptance tests.

#ifndef NEPHROSCOPE_TESTS_TESTING_TEST_UTIL_H_
#define NEPHROSCOPE_TESTS_TESTING_TEST_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nephroscope/dataset.h"
#include "nephroscope/model.h"
#include "nephroscope/pipeline.h"
#include "nephroscope/random.h"
#include "nephroscope/schema.h"

namespace nephroscope::testing {

// Features x0..x{numeric-1} (numeric) followed by b0..b{binary-1}.
FeatureSchema ToySchema(size_t numeric, size_t binary = 0);

// Scaled-provenance dataset over `schema`, ids 0.., labels optional.
Dataset MakeDataset(const FeatureSchema& schema, const std::vector<std::vector<double>>& rows,
                    const std::vector<int>& labels = {});

// Uniform [0,1) numeric cells, fair-coin binary cells.
std::vector<double> RandomRow(Rng& rng, const FeatureSchema& schema);

// Random CART-shaped tree: internal nodes split on random features at random
// thresholds in (0,1), leaves carry values in [0,1] and matching counts.
DecisionTree RandomTree(Rng& rng, size_t feature_count, size_t max_depth,
                        double leaf_probability = 0.3);

Model ForestOf(std::vector<DecisionTree> trees, size_t feature_count);
Model TreeModel(DecisionTree tree, size_t feature_count);
Model LogisticOf(std::vector<double> weights, double intercept);

// Leaf with the given value.
TreeNode Leaf(double value);
// Depth-1 tree on `feature`: value <= threshold -> left, else right.
DecisionTree Stump(size_t feature, double threshold, double left, double right);

// Interventional Shapley values by direct subset enumeration, written
// independently of the library so it can serve as an oracle. `base`, when
// given, receives the value of the empty coalition.
std::vector<double> ReferenceShapley(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> instance,
                                     const std::vector<std::vector<double>>& background,
                                     double* base = nullptr);

// Exhaustive nearest-opposite-prediction scan with the default distance
// (L1, numeric differences over the pool's MAD, unit categorical cost).
// Returns the pool index, lowest index among ties, or -1.
int64_t ReferenceCounterfactual(std::span<const double> reference, const Dataset& pool,
                                const Model& model, double threshold);

// Rows of a dataset.
std::vector<std::vector<double>> RowsOf(const Dataset& dataset);

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// The shipped synthetic cohort (default generator settings).
const Dataset& SyntheticCohortRaw();

// Default-config training run on the synthetic cohort, computed once per
// process.
const TrainResult& SyntheticTraining();

// Directory holding the repository's data/ files.
std::filesystem::path DataDir();

}  // namespace nephroscope::testing

#endif  // NEPHROSCOPE_TESTS_TESTING_TEST_UTIL_H_
