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

// End-to-end training run and the configuration that drives it.
//
// ingest -> impute -> split -> scale -> grid search (SMOTE-NC inside folds)
//   -> threshold from out-of-fold scores -> champion selection
//   -> final fit on the resampled training partition -> test evaluation

#ifndef NEPHROSCOPE_PIPELINE_H_
#define NEPHROSCOPE_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nephroscope/anchors.h"
#include "nephroscope/dataset.h"
#include "nephroscope/evaluation.h"
#include "nephroscope/grid_search.h"
#include "nephroscope/local_explain.h"
#include "nephroscope/model.h"
#include "nephroscope/model_io.h"
#include "nephroscope/resampler.h"
#include "nephroscope/shap.h"

namespace nephroscope {

inline constexpr char kToolVersion[] = "1.0.0";
inline constexpr int kSchemaVersion = 1;

struct ModelSpec {
  ModelKind kind = ModelKind::kForest;
  LearnerParams params;
  HyperGrid grid;
};

struct PipelineConfig {
  uint64_t seed = 42;
  double test_fraction = 0.2;
  std::vector<ImputationRule> imputation;
  ResampleConfig smote;  // seed follows `seed`
  ThresholdPolicy threshold_policy = ThresholdPolicy::Floor(0.6);
  size_t cv_folds = 5;
  SelectionMetric selection_metric = SelectionMetric::kSensitivity;
  double cv_evaluation_threshold = 0.5;
  // Candidates in selection order.
  std::vector<ModelSpec> models;
  size_t background_size = kDefaultBackgroundSize;
  AttributionOptions attribution;
  PrototypeOptions prototypes;
  AnchorOptions anchors;
  size_t pdp_points = 20;

  static PipelineConfig Defaults();
  // Keys absent from the document keep their defaults; unknown keys are
  // rejected.
  static PipelineConfig FromJson(std::string_view text);
  static PipelineConfig Load(const std::filesystem::path& path);
  // Canonical form; every default is spelled out.
  std::string ToJson() const;
  std::string Digest() const;
};

struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string config_digest;
  std::string dataset_digest;
  std::string schema_hash;
  int schema_version = kSchemaVersion;
  uint64_t seed = 0;
  std::string champion;
  double threshold = 0.5;
  std::string threshold_policy;
  // Not part of the digest.
  std::string created_at;

  std::string CanonicalJson() const;  // without created_at
  std::string Digest() const;
};

struct CandidateResult {
  ModelKind kind = ModelKind::kForest;
  std::string cell;
  GridSearchResult grid;
  ThresholdChoice threshold;
  // Pooled out-of-fold metrics at the chosen threshold.
  EvalMetrics validation;
};

struct TrainResult {
  ModelBundle bundle;
  RunManifest manifest;
  std::vector<CandidateResult> candidates;
  Selection selection;
  EvalMetrics test_metrics;
  ClassCounts class_counts;
  size_t train_size = 0;
  size_t test_size = 0;
  size_t resampled_train_size = 0;
  ValidationReport validation;
  // Imputed raw training partition: the counterfactual pool shipped beside
  // the model.
  Dataset pool;
  std::vector<std::string> warnings;
};

TrainResult RunTraining(const Dataset& raw, const PipelineConfig& config,
                        const std::string& dataset_digest,
                        const ValidationReport& validation = {});

// Writes model.json, metrics.json, metrics.txt and pool.csv atomically.
void WriteTrainingArtifacts(const TrainResult& result, const std::filesystem::path& out_dir);

// Imputes a raw dataset with the configured rules and scales it with the
// bundle scaler. Labels are kept.
Dataset PrepareForModel(const Dataset& raw, const ModelBundle& bundle,
                        const PipelineConfig& config);

// Current UTC time, ISO-8601.
std::string UtcTimestamp();

}  // namespace nephroscope

#endif  // NEPHROSCOPE_PIPELINE_H_
