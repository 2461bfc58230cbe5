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

#include "nephroscope/pipeline.h"

#include <chrono>
#include <ctime>
#include <set>

#include <json.hpp>

#include "json_io.h"
#include "nephroscope/digest.h"
#include "nephroscope/report.h"
#include "nephroscope/status.h"

namespace nephroscope {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr char kModule[] = "cli";

[[noreturn]] void ConfigError(const std::string& message) {
  throw Error(ErrorCode::kInvalidArgument, kModule, "config: " + message);
}

void RejectUnknown(const ordered_json& object, std::string_view where,
                   std::initializer_list<std::string_view> known) {
  if (!object.is_object()) ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : object.items()) {
    bool ok = false;
    for (auto k : known) ok |= key == k;
    if (!ok) ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

template <typename T>
T Get(const ordered_json& object, const char* key, T fallback, std::string_view where) {
  if (!object.contains(key)) return fallback;
  try {
    return object.at(key).get<T>();
  } catch (const json::exception&) {
    ConfigError("bad value for '" + std::string(key) + "' in " + std::string(where));
  }
}

ModelSpec DefaultSpec(ModelKind kind) {
  ModelSpec spec;
  spec.kind = kind;
  spec.params = LearnerParams::Defaults(kind);
  switch (kind) {
    case ModelKind::kLogistic:
      spec.grid.axes = {{"l2", {1e-3, 1e-2, 1e-1}}};
      break;
    case ModelKind::kTree:
      spec.grid.axes = {{"max_depth", {3, 5, 8}}, {"min_samples_leaf", {2, 5}}};
      break;
    case ModelKind::kForest:
      spec.params.n_trees = 200;
      spec.grid.axes = {{"max_features", {3, 5}}, {"min_samples_leaf", {1, 3}}};
      break;
    case ModelKind::kBoosted:
      spec.grid.axes = {{"n_rounds", {100, 200}}, {"learning_rate", {0.05, 0.1}}};
      break;
  }
  return spec;
}

std::string Iso8601(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

}  // namespace

PipelineConfig PipelineConfig::Defaults() {
  PipelineConfig config;
  config.imputation = DefaultImputationRules(CkdSchema());
  for (auto kind : {ModelKind::kLogistic, ModelKind::kTree, ModelKind::kForest,
                    ModelKind::kBoosted}) {
    config.models.push_back(DefaultSpec(kind));
  }
  return config;
}

std::string PipelineConfig::ToJson() const {
  ordered_json doc;
  doc["seed"] = seed;
  doc["split"] = {{"test_fraction", test_fraction}};
  ordered_json rules = ordered_json::array();
  for (const auto& r : imputation) rules.push_back({{"target", r.target}, {"group_by", r.group_by}});
  doc["imputation"] = rules;
  doc["smote"] = {{"k_neighbors", smote.k_neighbors}, {"target_ratio", smote.target_ratio}};
  doc["threshold_policy"] = threshold_policy.ToString();
  doc["cross_validation"] = {
      {"folds", cv_folds},
      {"selection_metric",
       selection_metric == SelectionMetric::kSensitivity ? "sensitivity" : "rocauc"},
      {"evaluation_threshold", cv_evaluation_threshold}};
  ordered_json model_docs = ordered_json::array();
  for (const auto& m : models) {
    ordered_json params;
    for (const auto& name : LearnerParams::Names()) params[name] = m.params.Get(name);
    ordered_json grid = ordered_json::object();
    for (const auto& [name, values] : m.grid.axes) grid[name] = values;
    model_docs.push_back({{"kind", ModelKindName(m.kind)}, {"params", params}, {"grid", grid}});
  }
  doc["models"] = model_docs;
  doc["attribution"] = {{"background_size", background_size},
                        {"permutations", attribution.permutations}};
  doc["prototypes"] = {{"m", prototypes.m},
                       {"epsilon_quantile", prototypes.epsilon_quantile},
                       {"epsilon_sample", prototypes.epsilon_sample},
                       {"other_class_penalty", prototypes.other_class_penalty}};
  doc["distance"] = {
      {"numeric_scale", NumericScaleName(prototypes.distance.numeric_scale)},
      {"categorical_mismatch_cost", prototypes.distance.categorical_mismatch_cost},
      {"norm", DistanceNormName(prototypes.distance.norm)}};
  doc["anchors"] = {{"tau", anchors.tau},
                    {"beam", anchors.beam},
                    {"max_predicates", anchors.max_predicates},
                    {"n_samples", anchors.n_samples},
                    {"confidence", anchors.confidence}};
  doc["dependence"] = {{"n_points", pdp_points}};
  return doc.dump(2) + "\n";
}

PipelineConfig PipelineConfig::FromJson(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const json::exception& e) {
    ConfigError(std::string("not valid JSON: ") + e.what());
  }
  RejectUnknown(doc, "config",
                {"seed", "split", "imputation", "smote", "threshold_policy", "cross_validation",
                 "models", "attribution", "prototypes", "distance", "anchors", "dependence"});
  PipelineConfig c = Defaults();
  c.seed = Get<uint64_t>(doc, "seed", c.seed, "config");
  if (doc.contains("split")) {
    RejectUnknown(doc["split"], "split", {"test_fraction"});
    c.test_fraction = Get<double>(doc["split"], "test_fraction", c.test_fraction, "split");
  }
  if (doc.contains("imputation")) {
    if (!doc["imputation"].is_array()) ConfigError("imputation must be a list");
    c.imputation.clear();
    for (const auto& r : doc["imputation"]) {
      RejectUnknown(r, "imputation rule", {"target", "group_by"});
      c.imputation.push_back({Get<std::string>(r, "target", "", "imputation rule"),
                              Get<std::string>(r, "group_by", "", "imputation rule")});
    }
  }
  if (doc.contains("smote")) {
    RejectUnknown(doc["smote"], "smote", {"k_neighbors", "target_ratio"});
    c.smote.k_neighbors = Get<size_t>(doc["smote"], "k_neighbors", c.smote.k_neighbors, "smote");
    c.smote.target_ratio = Get<double>(doc["smote"], "target_ratio", c.smote.target_ratio, "smote");
  }
  if (doc.contains("threshold_policy")) {
    c.threshold_policy =
        ThresholdPolicy::Parse(Get<std::string>(doc, "threshold_policy", "", "config"));
  }
  if (doc.contains("cross_validation")) {
    const auto& cv = doc["cross_validation"];
    RejectUnknown(cv, "cross_validation", {"folds", "selection_metric", "evaluation_threshold"});
    c.cv_folds = Get<size_t>(cv, "folds", c.cv_folds, "cross_validation");
    const auto metric = Get<std::string>(cv, "selection_metric", "sensitivity", "cross_validation");
    if (metric == "sensitivity") {
      c.selection_metric = SelectionMetric::kSensitivity;
    } else if (metric == "rocauc") {
      c.selection_metric = SelectionMetric::kRocAuc;
    } else {
      ConfigError("selection_metric must be 'sensitivity' or 'rocauc'");
    }
    c.cv_evaluation_threshold =
        Get<double>(cv, "evaluation_threshold", c.cv_evaluation_threshold, "cross_validation");
  }
  if (doc.contains("models")) {
    if (!doc["models"].is_array() || doc["models"].empty()) {
      ConfigError("models must be a non-empty list");
    }
    c.models.clear();
    std::set<ModelKind> seen;
    for (const auto& m : doc["models"]) {
      RejectUnknown(m, "model", {"kind", "params", "grid"});
      const auto name = Get<std::string>(m, "kind", "", "model");
      const auto kind = ParseModelKind(name);
      if (!kind) ConfigError("unknown model kind '" + name + "'");
      if (!seen.insert(*kind).second) ConfigError("model kind '" + name + "' listed twice");
      ModelSpec spec = DefaultSpec(*kind);
      if (m.contains("params")) {
        if (!m["params"].is_object()) ConfigError("params must be an object");
        for (const auto& [key, value] : m["params"].items()) {
          if (!value.is_number() && !value.is_boolean()) ConfigError("param '" + key + "' must be a number");
          spec.params.Set(key, value.is_boolean() ? (value.get<bool>() ? 1.0 : 0.0)
                                                  : value.get<double>());
        }
      }
      if (m.contains("grid")) {
        if (!m["grid"].is_object()) ConfigError("grid must be an object");
        spec.grid.axes.clear();
        for (const auto& [key, values] : m["grid"].items()) {
          if (!values.is_array()) ConfigError("grid axis '" + key + "' must be a list");
          LearnerParams probe = spec.params;
          std::vector<double> axis;
          for (const auto& v : values) {
            if (!v.is_number()) ConfigError("grid axis '" + key + "' must hold numbers");
            probe.Set(key, v.get<double>());
            axis.push_back(v.get<double>());
          }
          spec.grid.axes.emplace_back(key, axis);
        }
      }
      c.models.push_back(std::move(spec));
    }
  }
  if (doc.contains("attribution")) {
    const auto& a = doc["attribution"];
    RejectUnknown(a, "attribution", {"background_size", "permutations"});
    c.background_size = Get<size_t>(a, "background_size", c.background_size, "attribution");
    c.attribution.permutations =
        Get<size_t>(a, "permutations", c.attribution.permutations, "attribution");
  }
  if (doc.contains("prototypes")) {
    const auto& p = doc["prototypes"];
    RejectUnknown(p, "prototypes", {"m", "epsilon_quantile", "epsilon_sample", "other_class_penalty"});
    c.prototypes.m = Get<size_t>(p, "m", c.prototypes.m, "prototypes");
    c.prototypes.epsilon_quantile =
        Get<double>(p, "epsilon_quantile", c.prototypes.epsilon_quantile, "prototypes");
    c.prototypes.epsilon_sample =
        Get<size_t>(p, "epsilon_sample", c.prototypes.epsilon_sample, "prototypes");
    c.prototypes.other_class_penalty =
        Get<double>(p, "other_class_penalty", c.prototypes.other_class_penalty, "prototypes");
  }
  if (doc.contains("distance")) {
    const auto& d = doc["distance"];
    RejectUnknown(d, "distance", {"numeric_scale", "categorical_mismatch_cost", "norm"});
    const auto scale = Get<std::string>(d, "numeric_scale", "mad", "distance");
    if (scale != "mad" && scale != "std") ConfigError("numeric_scale must be 'mad' or 'std'");
    c.prototypes.distance.numeric_scale = scale == "mad" ? NumericScale::kMad : NumericScale::kStd;
    const auto norm = Get<std::string>(d, "norm", "l1", "distance");
    if (norm != "l1" && norm != "l2") ConfigError("norm must be 'l1' or 'l2'");
    c.prototypes.distance.norm = norm == "l1" ? DistanceNorm::kL1 : DistanceNorm::kL2;
    c.prototypes.distance.categorical_mismatch_cost =
        Get<double>(d, "categorical_mismatch_cost", 1.0, "distance");
  }
  if (doc.contains("anchors")) {
    const auto& a = doc["anchors"];
    RejectUnknown(a, "anchors", {"tau", "beam", "max_predicates", "n_samples", "confidence"});
    c.anchors.tau = Get<double>(a, "tau", c.anchors.tau, "anchors");
    c.anchors.beam = Get<size_t>(a, "beam", c.anchors.beam, "anchors");
    c.anchors.max_predicates = Get<size_t>(a, "max_predicates", c.anchors.max_predicates, "anchors");
    c.anchors.n_samples = Get<size_t>(a, "n_samples", c.anchors.n_samples, "anchors");
    c.anchors.confidence = Get<double>(a, "confidence", c.anchors.confidence, "anchors");
  }
  if (doc.contains("dependence")) {
    RejectUnknown(doc["dependence"], "dependence", {"n_points"});
    c.pdp_points = Get<size_t>(doc["dependence"], "n_points", c.pdp_points, "dependence");
  }
  if (c.cv_folds < 2) ConfigError("cross_validation.folds must be >= 2");
  // Every seeded stage follows the run seed.
  c.smote.seed = c.seed;
  c.attribution.seed = c.seed;
  c.prototypes.seed = c.seed;
  return c;
}

PipelineConfig PipelineConfig::Load(const std::filesystem::path& path) {
  return FromJson(ReadFileBytes(path));
}

std::string PipelineConfig::Digest() const { return Sha256Hex(ToJson()); }

std::string RunManifest::CanonicalJson() const {
  ordered_json doc = {{"tool_version", tool_version},
                      {"config_digest", config_digest},
                      {"dataset_digest", dataset_digest},
                      {"schema_hash", schema_hash},
                      {"schema_version", schema_version},
                      {"seed", seed},
                      {"champion", champion},
                      {"threshold", threshold},
                      {"threshold_policy", threshold_policy}};
  return doc.dump();
}

std::string RunManifest::Digest() const { return Sha256Hex(CanonicalJson()); }

std::string UtcTimestamp() {
  return Iso8601(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now()));
}

TrainResult RunTraining(const Dataset& raw, const PipelineConfig& config,
                        const std::string& dataset_digest, const ValidationReport& validation) {
  if (config.models.empty()) throw Error(ErrorCode::kInvalidArgument, kModule, "no candidate models");
  const Dataset imputed = ImputeGroupMean(raw, config.imputation);
  auto [train_imputed, test_imputed] = SplitStratified(imputed, config.test_fraction, config.seed);
  const ScalerParams scaler = FitScaler(train_imputed);
  const Dataset train = ApplyScaler(train_imputed, scaler);
  const Dataset test = ApplyScaler(test_imputed, scaler);

  ResampleConfig smote = config.smote;
  smote.seed = config.seed;
  CrossValidationOptions cv;
  cv.smote = smote;
  cv.seed = config.seed;
  cv.evaluation_threshold = config.cv_evaluation_threshold;

  std::vector<CandidateResult> candidates;
  std::vector<EvalMetrics> validation_metrics;
  for (const auto& spec : config.models) {
    HyperGrid grid = spec.grid;
    grid.cv_folds = config.cv_folds;
    grid.selection_metric = config.selection_metric;
    CandidateResult candidate;
    candidate.kind = spec.kind;
    candidate.grid = GridSearch(spec.kind, grid, train, spec.params, cv);
    const GridCell& best = candidate.grid.cells[candidate.grid.best];
    candidate.cell = std::string(ModelKindName(spec.kind)) + DescribeCell(best.overrides);
    candidate.threshold = ChooseThreshold(candidate.grid.best_oof_scores, candidate.grid.labels,
                                          config.threshold_policy);
    candidate.validation = Evaluate(candidate.grid.best_oof_scores, candidate.grid.labels,
                                    candidate.threshold.threshold);
    validation_metrics.push_back(candidate.validation);
    candidates.push_back(std::move(candidate));
  }
  const Selection selection = SelectModel(validation_metrics);
  const CandidateResult& champion = candidates[selection.index];
  const GridCell& champion_cell = champion.grid.cells[champion.grid.best];

  const SmoteResult resampled = SmoteNc(train, smote);
  std::vector<std::string> warnings;
  Model model = Train(champion.kind, resampled.dataset, champion_cell.params, config.seed, &warnings);
  const std::vector<double> test_scores = PredictAll(model, test);
  const EvalMetrics test_metrics =
      Evaluate(test_scores, LabelsOf(test), champion.threshold.threshold);
  if (champion.threshold.floor_unattainable) {
    warnings.push_back("specificity floor unattainable on validation scores; threshold maximizes specificity");
  }

  const Dataset background = SubsampleBackground(train, config.background_size, config.seed);
  std::vector<std::vector<double>> background_rows;
  for (const auto& record : background.records) background_rows.push_back(record.values);

  RunManifest manifest;
  manifest.config_digest = config.Digest();
  manifest.dataset_digest = dataset_digest;
  manifest.schema_hash = raw.schema.Hash();
  manifest.seed = config.seed;
  manifest.champion = champion.cell;
  manifest.threshold = champion.threshold.threshold;
  manifest.threshold_policy = config.threshold_policy.ToString();
  manifest.created_at = UtcTimestamp();

  TrainResult result{
      ModelBundle{raw.schema, scaler, std::move(model), champion.threshold.threshold,
                  config.threshold_policy.ToString(), std::move(background_rows), champion.cell,
                  manifest.Digest()},
      manifest,
      std::move(candidates),
      selection,
      test_metrics,
      raw.CountClasses(),
      train.size(),
      test.size(),
      resampled.dataset.size(),
      validation,
      train_imputed,
      std::move(warnings)};
  return result;
}

void WriteTrainingArtifacts(const TrainResult& result, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError, kModule,
                "cannot create output directory '" + out_dir.string() + "': " + ec.message());
  }
  SaveBundle(result.bundle, out_dir / "model.json");
  WriteFileAtomic(out_dir / "metrics.json", RenderTrainingJson(result));
  WriteFileAtomic(out_dir / "metrics.txt", RenderTrainingText(result));
  WriteCsv(result.pool, out_dir / "pool.csv");
}

Dataset PrepareForModel(const Dataset& raw, const ModelBundle& bundle,
                        const PipelineConfig& config) {
  if (!(raw.schema == bundle.schema)) {
    throw Error(ErrorCode::kSchemaMismatch, kModule, "data schema does not match the model");
  }
  Dataset imputed = raw.provenance == Provenance::kRaw ? ImputeGroupMean(raw, config.imputation) : raw;
  return ApplyScaler(imputed, bundle.scaler);
}

}  // namespace nephroscope
