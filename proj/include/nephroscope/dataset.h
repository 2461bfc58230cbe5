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

// Patient records, ingestion, group-mean imputation, min-max scaling and
// stratified splitting. All operations are pure: they return new datasets.

#ifndef NEPHROSCOPE_DATASET_H_
#define NEPHROSCOPE_DATASET_H_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nephroscope/schema.h"

namespace nephroscope {

enum class Label { kNoCkd = 0, kCkd = 1 };

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool IsMissing(double value) { return std::isnan(value); }

inline int LabelValue(Label label) { return label == Label::kCkd ? 1 : 0; }
std::string_view LabelName(Label label);

struct PatientRecord {
  // Aligned with the schema order. Missing cells hold kMissing.
  std::vector<double> values;
  std::optional<Label> label;
  // Data row index in the source table, or the base record's id for
  // synthetic records.
  int64_t id = -1;
  bool synthetic = false;
};

enum class Provenance { kRaw, kImputed, kScaled, kResampled };
std::string_view ProvenanceName(Provenance provenance);

// Per-feature min-max parameters. Binary features are carried with
// scaled = false and pass through unchanged.
struct ScalerParams {
  std::vector<double> min;
  std::vector<double> max;
  std::vector<bool> scaled;
  std::string schema_hash;

  size_t size() const { return min.size(); }
  double Scale(size_t feature, double value) const;
  double Unscale(size_t feature, double value) const;
  std::vector<double> ScaleRow(std::span<const double> raw) const;
  std::vector<double> UnscaleRow(std::span<const double> scaled_values) const;

  bool operator==(const ScalerParams& other) const = default;
};

struct ClassCounts {
  size_t negative = 0;
  size_t positive = 0;
  size_t unlabeled = 0;

  size_t labeled() const { return negative + positive; }
  double positive_fraction() const {
    return labeled() == 0 ? 0.0
                          : static_cast<double>(positive) / labeled();
  }
};

struct Dataset {
  explicit Dataset(FeatureSchema dataset_schema)
      : schema(std::move(dataset_schema)) {}

  FeatureSchema schema;
  std::vector<PatientRecord> records;
  std::optional<ScalerParams> scaler;
  Provenance provenance = Provenance::kRaw;

  size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  ClassCounts CountClasses() const;
  // Copy with the same schema, scaler and provenance but no records.
  Dataset EmptyLike() const;
};

struct ValidationWarning {
  size_t row = 0;  // 0-based data row
  std::string column;
  double value = 0.0;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationWarning> warnings;
  bool ok() const { return warnings.empty(); }
};

// Parses a CSV whose header names the schema features (any order,
// case-insensitive) plus an optional label column. Cells "" and "NA" are
// missing. Binary columns accept 0/1, no/yes, woman/man. Out-of-range numeric
// values are appended to `report` rather than rejected.
Dataset ParseCsv(std::string_view text, const FeatureSchema& schema,
                 ValidationReport* report = nullptr);
Dataset LoadCsv(const std::filesystem::path& path, const FeatureSchema& schema,
                ValidationReport* report = nullptr);

// Canonical column order, label as no/yes, values printed with round-trip
// precision. Missing cells are written as "NA".
std::string FormatCsv(const Dataset& dataset);
void WriteCsv(const Dataset& dataset, const std::filesystem::path& path);

// Checks a single raw feature value against its spec. Returns an error
// message for invalid binary encodings and non-finite numbers; out-of-range
// values are reported through `warning`.
std::optional<std::string> ValidateValue(const FeatureSpec& spec, double value,
                                         std::string* warning);

struct ImputationRule {
  std::string target;    // feature with missing cells
  std::string group_by;  // binary feature defining the donor groups
};

// HbA1C grouped by DM and TG grouped by DLP, restricted to the rules whose
// features exist in `schema`.
std::vector<ImputationRule> DefaultImputationRules(const FeatureSchema& schema);

Dataset ImputeGroupMean(const Dataset& dataset);
Dataset ImputeGroupMean(const Dataset& dataset,
                        std::span<const ImputationRule> rules);

ScalerParams FitScaler(const Dataset& dataset);
Dataset ApplyScaler(const Dataset& dataset, const ScalerParams& scaler);
Dataset InvertScaler(const Dataset& dataset);

// Per-class shuffle with the given seed; each class contributes
// round(n_class * test_fraction) records to the test partition, clamped so
// both partitions keep at least one record of every class.
std::pair<Dataset, Dataset> SplitStratified(const Dataset& dataset,
                                            double test_fraction,
                                            uint64_t seed);

// Stratified k-fold assignment: fold id per record.
std::vector<size_t> StratifiedFolds(const Dataset& dataset, size_t folds,
                                    uint64_t seed);

Dataset Subset(const Dataset& dataset, std::span<const size_t> indices);

}  // namespace nephroscope

#endif  // NEPHROSCOPE_DATASET_H_
