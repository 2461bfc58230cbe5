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

// Screening metrics, operating-threshold choice and champion selection.

#ifndef NEPHROSCOPE_EVALUATION_H_
#define NEPHROSCOPE_EVALUATION_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nephroscope/dataset.h"

namespace nephroscope {

struct ConfusionCounts {
  size_t tp = 0;
  size_t fp = 0;
  size_t tn = 0;
  size_t fn = 0;

  size_t total() const { return tp + fp + tn + fn; }
  // 0 when there are no positives / negatives.
  double sensitivity() const;
  double specificity() const;

  bool operator==(const ConfusionCounts&) const = default;
};

struct EvalMetrics {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double rocauc = 0.0;
  double threshold = 0.5;
  ConfusionCounts counts;
};

// A record is predicted CKD iff score >= threshold.
ConfusionCounts Confusion(std::span<const double> scores,
                          std::span<const Label> labels, double threshold);

// Mann-Whitney probability that a random positive outscores a random
// negative, ties counted as one half. Computed from mid-ranks in doubled
// integer units, so it is exact.
double RocAuc(std::span<const double> scores, std::span<const Label> labels);

EvalMetrics Evaluate(std::span<const double> scores, std::span<const Label> labels,
                     double threshold);

struct ThresholdPolicy {
  enum class Kind { kSensitivityWithSpecificityFloor, kFixed };
  Kind kind = Kind::kSensitivityWithSpecificityFloor;
  double value = 0.60;  // specificity floor, or the fixed threshold

  static ThresholdPolicy Floor(double floor) {
    return {Kind::kSensitivityWithSpecificityFloor, floor};
  }
  static ThresholdPolicy Fixed(double threshold) { return {Kind::kFixed, threshold}; }
  // "floor:0.6" or "fixed:0.5".
  static ThresholdPolicy Parse(const std::string& text);
  std::string ToString() const;
};

struct ThresholdChoice {
  double threshold = 0.5;
  // Set when no candidate met the specificity floor; the threshold then
  // maximizes specificity instead.
  bool floor_unattainable = false;
};

// Candidates are 0, 1 and the midpoints between consecutive distinct scores.
std::vector<double> CandidateThresholds(std::span<const double> scores);

ThresholdChoice ChooseThreshold(std::span<const double> scores,
                                std::span<const Label> labels,
                                const ThresholdPolicy& policy);

struct Selection {
  size_t index = 0;
  // Another candidate matched the winner on all three metrics and input
  // order decided.
  bool tie_broken_by_order = false;
};

// Argmax by sensitivity, then ROC-AUC, then specificity, then input order.
Selection SelectModel(std::span<const EvalMetrics> candidates);

std::vector<Label> LabelsOf(const Dataset& dataset);

}  // namespace nephroscope

#endif  // NEPHROSCOPE_EVALUATION_H_
