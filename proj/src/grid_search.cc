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

#include "nephroscope/grid_search.h"

#include <tuple>

#include "csv.h"
#include "nephroscope/status.h"

namespace nephroscope {
namespace {

constexpr char kModule[] = "learners";

}  // namespace

std::string DescribeCell(const std::vector<std::pair<std::string, double>>& overrides) {
  if (overrides.empty()) return "{defaults}";
  std::string out = "{";
  for (size_t i = 0; i < overrides.size(); ++i) {
    if (i > 0) out += ", ";
    out += overrides[i].first + "=" + internal::FormatDouble(overrides[i].second);
  }
  return out + "}";
}

std::vector<std::vector<std::pair<std::string, double>>> ExpandGrid(const HyperGrid& grid) {
  std::vector<std::vector<std::pair<std::string, double>>> cells = {{}};
  for (const auto& [name, values] : grid.axes) {
    if (values.empty()) {
      throw Error(ErrorCode::kInvalidArgument, kModule,
                  "grid axis '" + name + "' has no candidate values");
    }
    std::vector<std::vector<std::pair<std::string, double>>> next;
    for (const auto& cell : cells) {
      for (double value : values) {
        auto extended = cell;
        extended.emplace_back(name, value);
        next.push_back(std::move(extended));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

size_t SelectGridCell(std::span<const GridCell> cells, SelectionMetric metric) {
  if (cells.empty()) throw Error(ErrorCode::kInvalidArgument, kModule, "empty grid");
  auto key = [&](const GridCell& c) {
    const double primary =
        metric == SelectionMetric::kSensitivity ? c.metrics.sensitivity : c.metrics.rocauc;
    return std::tuple(primary, c.metrics.rocauc, -c.mean_model_size);
  };
  size_t best = 0;
  for (size_t i = 1; i < cells.size(); ++i) {
    if (key(cells[i]) > key(cells[best])) best = i;
  }
  return best;
}

GridSearchResult GridSearch(ModelKind kind, const HyperGrid& grid, const Dataset& train,
                            const LearnerParams& base_params,
                            const CrossValidationOptions& options) {
  if (grid.cv_folds < 2) throw Error(ErrorCode::kInvalidArgument, kModule, "cv_folds must be >= 2");
  const auto cell_overrides = ExpandGrid(grid);
  const std::vector<size_t> fold_of = StratifiedFolds(train, grid.cv_folds, options.seed);

  std::vector<Dataset> fit_parts;
  std::vector<Dataset> validation_parts;
  std::vector<std::vector<size_t>> validation_indices(grid.cv_folds);
  for (size_t fold = 0; fold < grid.cv_folds; ++fold) {
    std::vector<size_t> fit_indices;
    for (size_t i = 0; i < train.size(); ++i) {
      (fold_of[i] == fold ? validation_indices[fold] : fit_indices).push_back(i);
    }
    Dataset fit = Subset(train, fit_indices);
    if (options.apply_smote) {
      ResampleConfig smote = options.smote;
      smote.seed = options.smote.seed + fold;
      try {
        fit = SmoteNc(fit, smote).dataset;
      } catch (const Error& e) {
        throw Error(e.code(), kModule,
                    "fold " + std::to_string(fold) + " resampling failed: " + e.what());
      }
    }
    Dataset validation = Subset(train, validation_indices[fold]);
    if (options.fold_observer) options.fold_observer(fold, fit, validation);
    fit_parts.push_back(std::move(fit));
    validation_parts.push_back(std::move(validation));
  }

  GridSearchResult result;
  result.labels = LabelsOf(train);
  std::vector<std::vector<double>> cell_scores;
  for (const auto& overrides : cell_overrides) {
    GridCell cell;
    cell.overrides = overrides;
    cell.params = base_params;
    for (const auto& [name, value] : overrides) cell.params.Set(name, value);

    std::vector<double> oof(train.size(), 0.0);
    double size_sum = 0.0;
    for (size_t fold = 0; fold < grid.cv_folds; ++fold) {
      const Dataset& fit = fit_parts[fold];
      const bool tree_like = kind != ModelKind::kLogistic;
      if (tree_like && 2 * cell.params.min_samples_leaf > fit.size()) {
        throw Error(ErrorCode::kInvalidArgument, kModule,
                    "grid cell " + DescribeCell(overrides) + " cannot fit: min_samples_leaf " +
                        std::to_string(cell.params.min_samples_leaf) +
                        " exceeds half the fold size " + std::to_string(fit.size()));
      }
      Model model = [&] {
        try {
          return Train(kind, fit, cell.params, options.seed);
        } catch (const Error& e) {
          throw Error(e.code(), kModule,
                      "grid cell " + DescribeCell(overrides) + " cannot fit: " + e.what());
        }
      }();
      size_sum += static_cast<double>(model.Size());
      const auto& indices = validation_indices[fold];
      const Dataset& validation = validation_parts[fold];
      for (size_t j = 0; j < indices.size(); ++j) {
        oof[indices[j]] = PredictProba(model, validation.records[j]);
      }
    }
    cell.mean_model_size = size_sum / static_cast<double>(grid.cv_folds);
    cell.metrics = Evaluate(oof, result.labels, options.evaluation_threshold);
    result.cells.push_back(std::move(cell));
    cell_scores.push_back(std::move(oof));
  }
  result.best = SelectGridCell(result.cells, grid.selection_metric);
  result.best_oof_scores = std::move(cell_scores[result.best]);
  return result;
}

}  // namespace nephroscope
