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

#ifndef NEPHROSCOPE_GRID_SEARCH_H_
#define NEPHROSCOPE_GRID_SEARCH_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nephroscope/dataset.h"
#include "nephroscope/evaluation.h"
#include "nephroscope/model.h"
#include "nephroscope/resampler.h"

namespace nephroscope {

enum class SelectionMetric { kSensitivity, kRocAuc };

struct HyperGrid {
  // Candidate values per hyperparameter name (see LearnerParams::Set).
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  size_t cv_folds = 5;
  SelectionMetric selection_metric = SelectionMetric::kSensitivity;
};

struct GridCell {
  std::vector<std::pair<std::string, double>> overrides;
  LearnerParams params;
  // Pooled out-of-fold metrics at the evaluation threshold.
  EvalMetrics metrics;
  double mean_model_size = 0.0;
};

struct GridSearchResult {
  size_t best = 0;
  std::vector<GridCell> cells;
  // Out-of-fold scores of the best cell, aligned with the training records.
  std::vector<double> best_oof_scores;
  std::vector<Label> labels;
};

struct CrossValidationOptions {
  ResampleConfig smote;
  bool apply_smote = true;
  double evaluation_threshold = 0.5;
  uint64_t seed = 42;
  // Observes every fold: the (possibly resampled) fitting portion and the
  // untouched validation portion.
  std::function<void(size_t fold, const Dataset& fit, const Dataset& validation)>
      fold_observer;
};

// Cartesian product of the axes, first axis varying slowest.
std::vector<std::vector<std::pair<std::string, double>>> ExpandGrid(const HyperGrid& grid);

// Index of the best cell: selection metric, then ROC-AUC, then smaller mean
// model size, then input order.
size_t SelectGridCell(std::span<const GridCell> cells, SelectionMetric metric);

// Stratified k-fold cross-validation of every grid cell. SMOTE-NC runs on
// each fold's fitting portion only.
GridSearchResult GridSearch(ModelKind kind, const HyperGrid& grid, const Dataset& train,
                            const LearnerParams& base_params,
                            const CrossValidationOptions& options);

std::string DescribeCell(const std::vector<std::pair<std::string, double>>& overrides);

}  // namespace nephroscope

#endif  // NEPHROSCOPE_GRID_SEARCH_H_
