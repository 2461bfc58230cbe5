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

#include "nephroscope/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <system_error>

#include "csv.h"
#include "nephroscope/digest.h"
#include "nephroscope/random.h"
#include "nephroscope/status.h"

namespace nephroscope {
namespace {

using internal::ParseBinary;
using internal::ParseLabel;
using internal::ParseNumber;

constexpr char kModule[] = "data_core";

[[noreturn]] void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, kModule, message);
}

std::string CellContext(size_t row, std::string_view column) {
  return "row " + std::to_string(row + 1) + " (line " +
         std::to_string(row + 2) + "), column '" + std::string(column) + "'";
}

bool IsMissingCell(std::string_view text) {
  return text.empty() || text == "NA" || text == "na";
}

void RequireNoMissing(const Dataset& dataset, std::string_view operation) {
  for (size_t r = 0; r < dataset.size(); ++r) {
    const auto& values = dataset.records[r].values;
    for (size_t f = 0; f < values.size(); ++f) {
      if (IsMissing(values[f])) {
        Fail(ErrorCode::kInvalidArgument,
             std::string(operation) + ": " +
                 CellContext(r, dataset.schema.spec(f).name) +
                 " is missing; impute first");
      }
    }
  }
}

}  // namespace

std::string_view LabelName(Label label) {
  return label == Label::kCkd ? "CKD" : "noCKD";
}

std::string_view ProvenanceName(Provenance provenance) {
  switch (provenance) {
    case Provenance::kRaw:
      return "raw";
    case Provenance::kImputed:
      return "imputed";
    case Provenance::kScaled:
      return "scaled";
    case Provenance::kResampled:
      return "resampled";
  }
  return "unknown";
}

double ScalerParams::Scale(size_t feature, double value) const {
  if (!scaled[feature]) return value;
  return (value - min[feature]) / (max[feature] - min[feature]);
}

double ScalerParams::Unscale(size_t feature, double value) const {
  if (!scaled[feature]) return value;
  return min[feature] + value * (max[feature] - min[feature]);
}

std::vector<double> ScalerParams::ScaleRow(std::span<const double> raw) const {
  if (raw.size() != size()) {
    Fail(ErrorCode::kSchemaMismatch,
         "row has " + std::to_string(raw.size()) + " values, scaler expects " +
             std::to_string(size()));
  }
  std::vector<double> out(raw.size());
  for (size_t f = 0; f < raw.size(); ++f) out[f] = Scale(f, raw[f]);
  return out;
}

std::vector<double> ScalerParams::UnscaleRow(
    std::span<const double> scaled_values) const {
  if (scaled_values.size() != size()) {
    Fail(ErrorCode::kSchemaMismatch,
         "row has " + std::to_string(scaled_values.size()) +
             " values, scaler expects " + std::to_string(size()));
  }
  std::vector<double> out(scaled_values.size());
  for (size_t f = 0; f < scaled_values.size(); ++f) {
    out[f] = Unscale(f, scaled_values[f]);
  }
  return out;
}

ClassCounts Dataset::CountClasses() const {
  ClassCounts counts;
  for (const auto& record : records) {
    if (!record.label) {
      ++counts.unlabeled;
    } else if (*record.label == Label::kCkd) {
      ++counts.positive;
    } else {
      ++counts.negative;
    }
  }
  return counts;
}

Dataset Dataset::EmptyLike() const {
  Dataset out(schema);
  out.scaler = scaler;
  out.provenance = provenance;
  return out;
}

std::optional<std::string> ValidateValue(const FeatureSpec& spec, double value,
                                         std::string* warning) {
  if (!std::isfinite(value)) {
    return "value for '" + spec.name + "' is not a finite number";
  }
  if (spec.is_binary()) {
    if (value != 0.0 && value != 1.0) {
      return "categorical-encoding error: '" + spec.name +
             "' must be 0 or 1, got " + internal::FormatDouble(value);
    }
    return std::nullopt;
  }
  if (warning != nullptr && spec.allowed_range &&
      (value < spec.allowed_range->lo || value > spec.allowed_range->hi)) {
    *warning = "value " + internal::FormatDouble(value) + " for '" + spec.name +
               "' outside allowed range [" +
               internal::FormatDouble(spec.allowed_range->lo) + ", " +
               internal::FormatDouble(spec.allowed_range->hi) + "]";
  }
  return std::nullopt;
}

Dataset ParseCsv(std::string_view text, const FeatureSchema& schema,
                 ValidationReport* report) {
  const internal::CsvTable table = internal::ReadCsvTable(text);
  if (table.header.empty()) Fail(ErrorCode::kDataError, "missing header row");

  constexpr size_t kUnmapped = static_cast<size_t>(-1);
  std::vector<size_t> column_feature(table.header.size(), kUnmapped);
  std::optional<size_t> label_column;
  std::vector<bool> seen(schema.size(), false);
  for (size_t c = 0; c < table.header.size(); ++c) {
    const std::string& name = table.header[c];
    if (EqualsIgnoreCase(name, schema.target_name())) {
      if (label_column) Fail(ErrorCode::kDataError, "duplicate label column");
      label_column = c;
      continue;
    }
    auto feature = schema.IndexOf(name);
    if (!feature) Fail(ErrorCode::kDataError, "unknown column '" + name + "'");
    if (seen[*feature]) Fail(ErrorCode::kDataError, "duplicate column '" + name + "'");
    seen[*feature] = true;
    column_feature[c] = *feature;
  }
  for (size_t f = 0; f < schema.size(); ++f) {
    if (!seen[f]) {
      Fail(ErrorCode::kDataError, "missing column '" + schema.spec(f).name + "'");
    }
  }

  Dataset dataset(schema);
  dataset.records.reserve(table.rows.size());
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != table.header.size()) {
      Fail(ErrorCode::kDataError,
           "row " + std::to_string(r + 1) + " (line " + std::to_string(r + 2) +
               ") has " + std::to_string(row.size()) + " fields, expected " +
               std::to_string(table.header.size()));
    }
    PatientRecord record;
    record.values.assign(schema.size(), kMissing);
    record.id = static_cast<int64_t>(r);
    for (size_t c = 0; c < row.size(); ++c) {
      const std::string& cell = row[c];
      if (label_column && c == *label_column) {
        if (IsMissingCell(cell)) continue;
        record.label = ParseLabel(cell);
        if (!record.label) {
          Fail(ErrorCode::kDataError, CellContext(r, table.header[c]) +
                                          ": label must be no/yes or 0/1, got '" +
                                          cell + "'");
        }
        continue;
      }
      const size_t f = column_feature[c];
      const FeatureSpec& spec = schema.spec(f);
      if (IsMissingCell(cell)) {
        if (spec.is_binary() || !spec.missing_allowed) {
          Fail(ErrorCode::kDataError,
               CellContext(r, spec.name) + ": missing value not allowed");
        }
        continue;
      }
      std::optional<double> value =
          spec.is_binary() ? ParseBinary(cell) : ParseNumber(cell);
      if (!value) {
        Fail(ErrorCode::kDataError,
             CellContext(r, spec.name) +
                 (spec.is_binary() ? ": categorical-encoding error, expected 0/1, got '"
                                   : ": not a number: '") +
                 cell + "'");
      }
      std::string warning;
      if (auto problem = ValidateValue(spec, *value, &warning)) {
        Fail(ErrorCode::kDataError, CellContext(r, spec.name) + ": " + *problem);
      }
      if (!warning.empty() && report != nullptr) {
        report->warnings.push_back({r, spec.name, *value, warning});
      }
      record.values[f] = *value;
    }
    dataset.records.push_back(std::move(record));
  }
  return dataset;
}

Dataset LoadCsv(const std::filesystem::path& path, const FeatureSchema& schema,
                ValidationReport* report) {
  std::string bytes;
  try {
    bytes = ReadFileBytes(path);
  } catch (const Error& e) {
    Fail(ErrorCode::kIoError, e.what());
  }
  return ParseCsv(bytes, schema, report);
}

std::string FormatCsv(const Dataset& dataset) {
  const auto& schema = dataset.schema;
  const bool labeled = std::any_of(dataset.records.begin(), dataset.records.end(),
                                   [](const auto& r) { return r.label.has_value(); });
  std::string out;
  for (size_t f = 0; f < schema.size(); ++f) {
    if (f > 0) out += ',';
    out += schema.spec(f).name;
  }
  if (labeled) out += "," + schema.target_name();
  out += '\n';
  for (const auto& record : dataset.records) {
    for (size_t f = 0; f < schema.size(); ++f) {
      if (f > 0) out += ',';
      out += internal::FormatDouble(record.values[f]);
    }
    if (labeled) {
      out += ',';
      if (record.label) out += *record.label == Label::kCkd ? "yes" : "no";
    }
    out += '\n';
  }
  return out;
}

void WriteCsv(const Dataset& dataset, const std::filesystem::path& path) {
  WriteFileAtomic(path, FormatCsv(dataset));
}

std::vector<ImputationRule> DefaultImputationRules(const FeatureSchema& schema) {
  std::vector<ImputationRule> rules;
  for (ImputationRule rule : {ImputationRule{"HbA1C", "DM"},
                              ImputationRule{"TG", "DLP"}}) {
    if (schema.IndexOf(rule.target) && schema.IndexOf(rule.group_by)) {
      rules.push_back(rule);
    }
  }
  return rules;
}

Dataset ImputeGroupMean(const Dataset& dataset) {
  return ImputeGroupMean(dataset, DefaultImputationRules(dataset.schema));
}

Dataset ImputeGroupMean(const Dataset& dataset,
                        std::span<const ImputationRule> rules) {
  if (dataset.provenance != Provenance::kRaw &&
      dataset.provenance != Provenance::kImputed) {
    Fail(ErrorCode::kInvalidArgument,
         "imputation expects raw data, got provenance '" +
             std::string(ProvenanceName(dataset.provenance)) + "'");
  }
  Dataset out = dataset;
  out.provenance = Provenance::kImputed;

  for (const auto& rule : rules) {
    const size_t target = dataset.schema.RequireIndex(rule.target);
    const size_t group = dataset.schema.RequireIndex(rule.group_by);
    std::map<double, std::pair<double, size_t>> donors;  // group value -> (sum, n)
    for (size_t r = 0; r < dataset.size(); ++r) {
      const auto& values = dataset.records[r].values;
      if (IsMissing(values[group])) {
        Fail(ErrorCode::kDataError,
             CellContext(r, rule.group_by) + ": grouping feature is missing");
      }
      if (!IsMissing(values[target])) {
        auto& [sum, n] = donors[values[group]];
        sum += values[target];
        ++n;
      }
    }
    for (auto& record : out.records) {
      double& cell = record.values[target];
      if (!IsMissing(cell)) continue;
      auto it = donors.find(record.values[group]);
      if (it == donors.end()) {
        Fail(ErrorCode::kDataError,
             "imputation impossible: group " + rule.group_by + "=" +
                 internal::FormatDouble(record.values[group]) +
                 " has no non-missing " + rule.target + " donors");
      }
      cell = it->second.first / static_cast<double>(it->second.second);
    }
  }

  for (size_t r = 0; r < out.size(); ++r) {
    const auto& values = out.records[r].values;
    for (size_t f = 0; f < values.size(); ++f) {
      if (IsMissing(values[f])) {
        Fail(ErrorCode::kDataError, CellContext(r, out.schema.spec(f).name) +
                                        ": missing and no imputation rule covers it");
      }
    }
  }
  return out;
}

ScalerParams FitScaler(const Dataset& dataset) {
  if (dataset.provenance != Provenance::kImputed) {
    Fail(ErrorCode::kInvalidArgument,
         "scaler must be fitted on imputed data, got provenance '" +
             std::string(ProvenanceName(dataset.provenance)) + "'");
  }
  if (dataset.empty()) Fail(ErrorCode::kInvalidArgument, "cannot fit scaler on empty dataset");
  RequireNoMissing(dataset, "fit_scaler");

  const size_t n = dataset.schema.size();
  ScalerParams params;
  params.min.assign(n, 0.0);
  params.max.assign(n, 1.0);
  params.scaled.assign(n, false);
  params.schema_hash = dataset.schema.Hash();
  for (size_t f = 0; f < n; ++f) {
    if (dataset.schema.spec(f).is_binary()) continue;
    double lo = dataset.records.front().values[f];
    double hi = lo;
    for (const auto& record : dataset.records) {
      lo = std::min(lo, record.values[f]);
      hi = std::max(hi, record.values[f]);
    }
    if (!(hi > lo)) {
      Fail(ErrorCode::kDegenerate, "degenerate feature '" +
                                       dataset.schema.spec(f).name +
                                       "': constant value " +
                                       internal::FormatDouble(lo));
    }
    params.min[f] = lo;
    params.max[f] = hi;
    params.scaled[f] = true;
  }
  return params;
}

Dataset ApplyScaler(const Dataset& dataset, const ScalerParams& scaler) {
  if (scaler.size() != dataset.schema.size() ||
      scaler.schema_hash != dataset.schema.Hash()) {
    Fail(ErrorCode::kSchemaMismatch, "scaler was fitted on a different schema");
  }
  if (dataset.provenance == Provenance::kScaled ||
      dataset.provenance == Provenance::kResampled) {
    Fail(ErrorCode::kInvalidArgument, "dataset is already scaled");
  }
  Dataset out = dataset;
  for (auto& record : out.records) {
    for (size_t f = 0; f < record.values.size(); ++f) {
      record.values[f] = scaler.Scale(f, record.values[f]);
    }
  }
  out.scaler = scaler;
  out.provenance = Provenance::kScaled;
  return out;
}

Dataset InvertScaler(const Dataset& dataset) {
  if (!dataset.scaler) {
    Fail(ErrorCode::kInvalidArgument, "dataset carries no scaler to invert");
  }
  Dataset out = dataset;
  for (auto& record : out.records) {
    for (size_t f = 0; f < record.values.size(); ++f) {
      record.values[f] = dataset.scaler->Unscale(f, record.values[f]);
    }
  }
  out.scaler.reset();
  out.provenance = Provenance::kImputed;
  return out;
}

namespace {

std::pair<std::vector<size_t>, std::vector<size_t>> IndicesByClass(
    const Dataset& dataset) {
  std::vector<size_t> negatives;
  std::vector<size_t> positives;
  for (size_t i = 0; i < dataset.size(); ++i) {
    const auto& label = dataset.records[i].label;
    if (!label) {
      Fail(ErrorCode::kInvalidArgument,
           "record " + std::to_string(i) + " has no label; stratification needs labels");
    }
    (*label == Label::kCkd ? positives : negatives).push_back(i);
  }
  return {std::move(negatives), std::move(positives)};
}

}  // namespace

std::pair<Dataset, Dataset> SplitStratified(const Dataset& dataset,
                                            double test_fraction,
                                            uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "test_fraction must lie in (0, 1)");
  }
  auto [negatives, positives] = IndicesByClass(dataset);
  for (auto* group : {&negatives, &positives}) {
    if (group->size() < 2) {
      Fail(ErrorCode::kInvalidArgument,
           std::string(group == &positives ? "CKD" : "noCKD") +
               " class has fewer than 2 records; cannot stratify");
    }
  }
  // Per-class floors, then the remaining test slots by largest remainder
  // (CKD first on ties) so the test size is round(n * test_fraction).
  const double exact_neg = negatives.size() * test_fraction;
  const double exact_pos = positives.size() * test_fraction;
  size_t test_neg = static_cast<size_t>(std::floor(exact_neg));
  size_t test_pos = static_cast<size_t>(std::floor(exact_pos));
  const size_t total = static_cast<size_t>(std::llround(dataset.size() * test_fraction));
  for (size_t left = total > test_neg + test_pos ? total - test_neg - test_pos : 0; left > 0;
       --left) {
    const double rem_neg = exact_neg - static_cast<double>(test_neg);
    const double rem_pos = exact_pos - static_cast<double>(test_pos);
    (rem_pos >= rem_neg ? test_pos : test_neg) += 1;
  }
  test_neg = std::clamp<size_t>(test_neg, 1, negatives.size() - 1);
  test_pos = std::clamp<size_t>(test_pos, 1, positives.size() - 1);

  Rng rng(seed);
  std::vector<size_t> train_indices;
  std::vector<size_t> test_indices;
  for (auto* group : {&negatives, &positives}) {
    rng.Shuffle(std::span<size_t>(*group));
    const size_t n_test = group == &positives ? test_pos : test_neg;
    test_indices.insert(test_indices.end(), group->begin(), group->begin() + n_test);
    train_indices.insert(train_indices.end(), group->begin() + n_test, group->end());
  }
  std::sort(train_indices.begin(), train_indices.end());
  std::sort(test_indices.begin(), test_indices.end());
  return {Subset(dataset, train_indices), Subset(dataset, test_indices)};
}

std::vector<size_t> StratifiedFolds(const Dataset& dataset, size_t folds,
                                    uint64_t seed) {
  if (folds < 2) Fail(ErrorCode::kInvalidArgument, "need at least 2 folds");
  auto [negatives, positives] = IndicesByClass(dataset);
  if (negatives.size() < folds || positives.size() < folds) {
    Fail(ErrorCode::kInvalidArgument,
         "each class needs at least " + std::to_string(folds) +
             " records for " + std::to_string(folds) + "-fold stratification");
  }
  Rng rng(seed);
  std::vector<size_t> assignment(dataset.size(), 0);
  for (auto* group : {&negatives, &positives}) {
    rng.Shuffle(std::span<size_t>(*group));
    for (size_t i = 0; i < group->size(); ++i) assignment[(*group)[i]] = i % folds;
  }
  return assignment;
}

Dataset Subset(const Dataset& dataset, std::span<const size_t> indices) {
  Dataset out = dataset.EmptyLike();
  out.records.reserve(indices.size());
  for (size_t index : indices) out.records.push_back(dataset.records.at(index));
  return out;
}

}  // namespace nephroscope
