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

// Declarative edge-case suites and misprediction analysis.
//
// Suite files are YAML:
//
//   name: ckd-edge-cases
//   cases:
//     - id: edge_case_1
//       description: healthy young woman
//       severity: blocking          # class expectation
//       band_severity: warning      # probability band (default warning)
//       expectation:
//         class: noCKD
//         band: [0.68, 0.98]        # on the probability of the expected class
//       input: {gender: 0, age: 25, ...}
//   orderings:
//     - id: treated_above_untreated
//       left: edge_case_2
//       relation: ">"               # on P(CKD); one of > >= < <=
//       right: edge_case_3
//       severity: warning

#ifndef NEPHROSCOPE_SAFETY_H_
#define NEPHROSCOPE_SAFETY_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nephroscope/dataset.h"
#include "nephroscope/model.h"
#include "nephroscope/shap.h"

namespace nephroscope {

enum class Severity { kBlocking, kWarning };
std::string_view SeverityName(Severity severity);

struct ProbabilityBand {
  double lo = 0.0;
  double hi = 1.0;
};

struct SafetyCase {
  std::string id;
  std::string description;
  // Raw units, in file order.
  std::vector<std::pair<std::string, double>> input;
  Label expected_class = Label::kNoCkd;
  std::optional<ProbabilityBand> band;
  Severity severity = Severity::kBlocking;
  Severity band_severity = Severity::kWarning;
  // Set when the case could not be read; the case yields an error verdict.
  std::optional<std::string> malformed;
};

struct OrderingAssertion {
  std::string id;
  std::string description;
  std::string left;
  std::string relation;  // ">", ">=", "<", "<="
  std::string right;
  Severity severity = Severity::kWarning;
};

struct SafetySuite {
  std::string name;
  std::string description;
  std::vector<SafetyCase> cases;
  std::vector<OrderingAssertion> orderings;
};

// Throws Error(kDataError) when the document itself is unreadable. Problems
// inside a single case are recorded on that case.
SafetySuite ParseSuite(std::string_view yaml_text);
SafetySuite LoadSuite(const std::filesystem::path& path);

// The five edge cases shipped with the toolkit.
std::string_view BundledSuiteYaml();
SafetySuite BundledSuite();

enum class VerdictStatus { kPass, kFail, kError };
std::string_view VerdictStatusName(VerdictStatus status);

struct SafetyVerdict {
  std::string case_id;
  std::string description;
  VerdictStatus status = VerdictStatus::kError;
  Severity severity = Severity::kBlocking;
  Label expected_class = Label::kNoCkd;
  std::optional<Label> predicted_class;
  double probability_ckd = 0.0;
  // Probability of the expected class, the quantity the band refers to.
  double probability_expected = 0.0;
  double margin = 0.0;  // |P(CKD) - threshold|
  bool class_ok = false;
  std::optional<ProbabilityBand> band;
  std::optional<bool> band_ok;
  bool blocking_failure = false;
  std::string message;
  std::vector<std::string> warnings;  // out-of-range inputs
};

struct OrderingVerdict {
  std::string id;
  std::string description;
  std::string left;
  std::string relation;
  std::string right;
  Severity severity = Severity::kWarning;
  std::optional<double> left_probability;
  std::optional<double> right_probability;
  bool satisfied = false;
  bool blocking_failure = false;
  std::string message;
};

struct SafetyReport {
  std::string suite;
  double threshold = 0.5;
  // Sorted by case id.
  std::vector<SafetyVerdict> verdicts;
  std::vector<OrderingVerdict> orderings;
  size_t passed = 0;
  size_t failed = 0;
  size_t errors = 0;
  bool blocking_failure = false;
};

SafetyReport RunSuite(const SafetySuite& suite, const Model& model, const ScalerParams& scaler,
                      const FeatureSchema& schema, double threshold);

struct ErrorAnalysis {
  int64_t record_id = -1;
  size_t index = 0;
  Label truth = Label::kNoCkd;
  Label prediction = Label::kNoCkd;
  double probability_ckd = 0.0;
  // (no CKD : CKD), sums to 1.
  double ratio_no_ckd = 0.0;
  double ratio_ckd = 0.0;
  double margin = 0.0;
  // Up to five (feature, phi) pairs by |phi| descending.
  std::vector<std::pair<size_t, double>> top_attributions;
  size_t dominant_feature = 0;
  std::optional<double> counterfactual_distance;
  std::vector<std::string> present_risk_factors;
  std::vector<std::string> absent_risk_factors;
};

// One entry per misprediction, false negatives first, then by record id.
// `labeled` and `background` are scaled; `pool` (optional) supplies
// counterfactual candidates.
std::vector<ErrorAnalysis> AnalyzeErrors(const Model& model, const Dataset& labeled,
                                         double threshold, const Dataset& background,
                                         const Dataset* pool = nullptr,
                                         const AttributionOptions& options = {});

}  // namespace nephroscope

#endif  // NEPHROSCOPE_SAFETY_H_
