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


#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "nephroscope/safety.h"
#include "nephroscope/status.h"
#include "testing/test_util.h"

namespace nephroscope {
namespace {

using testing::LogisticOf;
using testing::MakeDataset;
using testing::ToySchema;

const ScalerParams& CohortScaler() {
  static const ScalerParams scaler = FitScaler(ImputeGroupMean(testing::SyntheticCohortRaw()));
  return scaler;
}

// CKD iff DM_meds: cases 1 and 3 predict noCKD, case 2 predicts CKD.
Model DmMedsModel() {
  std::vector<double> weights(ckd::kFeatureCount, 0.0);
  weights[ckd::kDMMeds] = 10.0;
  return LogisticOf(weights, -5.0);
}

std::string Replace(std::string text, const std::string& from, const std::string& to) {
  const size_t at = text.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  if (at != std::string::npos) text.replace(at, from.size(), to);
  return text;
}

SafetyReport RunCases(const SafetySuite& suite, const Model& model, double threshold = 0.5) {
  return RunSuite(suite, model, CohortScaler(), CkdSchema(), threshold);
}

TEST(SuiteParseTest, BundledSuite) {
  const SafetySuite suite = BundledSuite();
  EXPECT_EQ(suite.name, "ckd-edge-cases");
  ASSERT_EQ(suite.cases.size(), 5u);
  for (size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(suite.cases[i].id, "edge_case_" + std::to_string(i + 1));
    EXPECT_FALSE(suite.cases[i].malformed.has_value());
    EXPECT_EQ(suite.cases[i].input.size(), 21u);
    EXPECT_EQ(suite.cases[i].severity, i < 3 ? Severity::kBlocking : Severity::kWarning);
  }
  EXPECT_EQ(suite.cases[0].expected_class, Label::kNoCkd);
  EXPECT_EQ(suite.cases[1].expected_class, Label::kCkd);
  ASSERT_EQ(suite.orderings.size(), 1u);
  EXPECT_EQ(suite.orderings[0].left, "edge_case_2");
  EXPECT_EQ(suite.orderings[0].relation, ">");
  EXPECT_EQ(suite.orderings[0].right, "edge_case_3");
}

TEST(SuiteParseTest, DocumentErrors) {
  EXPECT_THROW(ParseSuite("cases: [unclosed"), Error);
  EXPECT_THROW(ParseSuite("- just\n- a list\n"), Error);
  EXPECT_THROW(ParseSuite("cases: 3\n"), Error);
  EXPECT_THROW(ParseSuite("orderings:\n  - {left: a, right: b, relation: '=='}\n"), Error);
  EXPECT_THROW(LoadSuite("/nonexistent/suite.yaml"), Error);
}

TEST(SuiteParseTest, CaseLevelProblemsAreRecorded) {
  const SafetySuite suite = ParseSuite(R"(
cases:
  - id: a
    expectation: {class: maybe}
    input: {gender: 0}
  - id: b
    severity: fatal
    expectation: {class: CKD, band: [0.9, 0.1]}
    input: {gender: 0}
  - description: no id
  - id: a
    expectation: {class: CKD}
    input: {gender: x}
)");
  ASSERT_EQ(suite.cases.size(), 4u);
  for (const auto& c : suite.cases) EXPECT_TRUE(c.malformed.has_value()) << c.id;
}

TEST(RunSuiteTest, EmptySuitePasses) {
  const SafetyReport report = RunCases(ParseSuite("name: empty\ncases: []\n"), DmMedsModel());
  EXPECT_TRUE(report.verdicts.empty());
  EXPECT_FALSE(report.blocking_failure);
  EXPECT_EQ(report.suite, "empty");
}

TEST(RunSuiteTest, ClassExpectationsAndOrdering) {
  const SafetyReport report = RunCases(BundledSuite(), DmMedsModel());
  ASSERT_EQ(report.verdicts.size(), 5u);
  const auto& case1 = report.verdicts[0];
  EXPECT_TRUE(case1.class_ok);
  EXPECT_EQ(case1.predicted_class, Label::kNoCkd);
  EXPECT_NEAR(case1.probability_expected, 1.0 - Logistic(-5.0), 1e-12);
  EXPECT_NEAR(case1.margin, std::abs(Logistic(-5.0) - 0.5), 1e-12);
  // Band [0.68, 0.98] misses 0.993 but only warns.
  EXPECT_EQ(case1.band_ok, false);
  EXPECT_EQ(case1.status, VerdictStatus::kFail);
  EXPECT_FALSE(case1.blocking_failure);
  EXPECT_TRUE(report.verdicts[1].class_ok);
  // Case 3 is untreated, so this model calls it noCKD: a blocking miss.
  EXPECT_FALSE(report.verdicts[2].class_ok);
  EXPECT_TRUE(report.verdicts[2].blocking_failure);
  EXPECT_TRUE(report.blocking_failure);
  ASSERT_EQ(report.orderings.size(), 1u);
  EXPECT_TRUE(report.orderings[0].satisfied);
  EXPECT_GT(*report.orderings[0].left_probability, *report.orderings[0].right_probability);
  EXPECT_EQ(report.passed + report.failed + report.errors, 5u);
}

TEST(RunSuiteTest, MalformedCaseDoesNotStopTheSuite) {
  const std::string yaml = Replace(std::string(BundledSuiteYaml()), "Cr: 61, ", "");
  const SafetyReport report = RunCases(ParseSuite(yaml), DmMedsModel(), 0.5);
  ASSERT_EQ(report.verdicts.size(), 5u);
  EXPECT_EQ(report.errors, 1u);
  EXPECT_EQ(report.verdicts[0].status, VerdictStatus::kError);
  EXPECT_NE(report.verdicts[0].message.find("Cr"), std::string::npos);
  EXPECT_TRUE(report.verdicts[0].blocking_failure);
  for (size_t i = 1; i < 5; ++i) EXPECT_NE(report.verdicts[i].status, VerdictStatus::kError);
  // A malformed warning-level case is an error verdict but not blocking.
  const std::string soft = Replace(std::string(BundledSuiteYaml()), "Cr: 100.77, ", "");
  const SafetyReport soft_report = RunCases(ParseSuite(soft), DmMedsModel());
  EXPECT_EQ(soft_report.verdicts[3].status, VerdictStatus::kError);
  EXPECT_FALSE(soft_report.verdicts[3].blocking_failure);
}

TEST(RunSuiteTest, OrderingOnAFailedCaseIsUnsatisfied) {
  const SafetySuite suite = ParseSuite(R"(
cases: []
orderings:
  - {id: o, left: missing_a, relation: ">", right: missing_b, severity: blocking}
)");
  const SafetyReport report = RunCases(suite, DmMedsModel());
  ASSERT_EQ(report.orderings.size(), 1u);
  EXPECT_FALSE(report.orderings[0].satisfied);
  EXPECT_TRUE(report.blocking_failure);
}

TEST(RunSuiteTest, WideningABandNeverBreaksAPass) {
  Rng rng(3);
  std::vector<double> weights(ckd::kFeatureCount);
  for (auto& w : weights) w = rng.Normal(0, 1);
  const Model model = LogisticOf(weights, 0.0);
  const SafetySuite base = BundledSuite();
  for (int trial = 0; trial < 50; ++trial) {
    SafetySuite narrow = base;
    SafetySuite wide = base;
    for (size_t i = 0; i < base.cases.size(); ++i) {
      const double lo = rng.Uniform() * 0.5;
      const double hi = lo + rng.Uniform() * 0.5;
      narrow.cases[i].band = ProbabilityBand{lo, hi};
      wide.cases[i].band = ProbabilityBand{lo * rng.Uniform(), hi + (1.0 - hi) * rng.Uniform()};
    }
    const SafetyReport a = RunCases(narrow, model);
    const SafetyReport b = RunCases(wide, model);
    for (size_t i = 0; i < a.verdicts.size(); ++i) {
      if (a.verdicts[i].status == VerdictStatus::kPass) {
        EXPECT_EQ(b.verdicts[i].status, VerdictStatus::kPass);
      }
    }
  }
}

TEST(RunSuiteTest, SchemaMismatchIsRejected) {
  EXPECT_THROW(RunSuite(BundledSuite(), LogisticOf({1.0}, 0.0), CohortScaler(), CkdSchema(), 0.5),
               Error);
}

TEST(ErrorAnalysisTest, PerfectModelHasNoEntries) {
  const Dataset data = MakeDataset(ToySchema(1), {{0.1}, {0.9}, {0.2}, {0.8}}, {0, 1, 0, 1});
  EXPECT_TRUE(AnalyzeErrors(LogisticOf({20}, -10), data, 0.5, data).empty());
}

TEST(ErrorAnalysisTest, SingleMistakeMargin) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 10; ++i) {
    rows.push_back({i / 10.0});
    labels.push_back(i >= 5 ? 1 : 0);
  }
  labels[2] = 1;  // x = 0.2 is CKD but scores low
  const Dataset data = MakeDataset(ToySchema(1), rows, labels);
  const Model model = LogisticOf({10}, -4.5);
  const double threshold = 0.4;
  const auto entries = AnalyzeErrors(model, data, threshold, data);
  ASSERT_EQ(entries.size(), 1u);
  const double p = 1.0 / (1.0 + std::exp(-(10 * 0.2 - 4.5)));
  EXPECT_EQ(entries[0].index, 2u);
  EXPECT_EQ(entries[0].truth, Label::kCkd);
  EXPECT_EQ(entries[0].prediction, Label::kNoCkd);
  EXPECT_NEAR(entries[0].margin, std::abs(p - threshold), 1e-12);
  EXPECT_NEAR(entries[0].ratio_no_ckd + entries[0].ratio_ckd, 1.0, 1e-15);
  ASSERT_TRUE(entries[0].counterfactual_distance.has_value());
}

TEST(ErrorAnalysisTest, FalseNegativesComeFirst) {
  const Dataset data =
      MakeDataset(ToySchema(1), {{0.9}, {0.1}, {0.8}, {0.2}}, {0, 1, 1, 0});
  const auto entries = AnalyzeErrors(LogisticOf({20}, -10), data, 0.5, data);
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].truth, Label::kCkd);
  EXPECT_EQ(entries[1].truth, Label::kNoCkd);
}

TEST(ErrorAnalysisTest, LowEgfrOnlyMiss) {
  // A model driven by eGFR alone misses a CKD patient with no comorbidity.
  std::vector<double> weights(ckd::kFeatureCount, 0.0);
  weights[ckd::kEGFR] = -6.0;
  const Model model = LogisticOf(weights, 0.5);
  const SafetySuite suite = BundledSuite();
  std::vector<double> raw(ckd::kFeatureCount);
  for (const auto& [name, value] : suite.cases[3].input) raw[*CkdSchema().IndexOf(name)] = value;
  const Dataset imputed = ImputeGroupMean(testing::SyntheticCohortRaw());
  const Dataset scaled = ApplyScaler(imputed, CohortScaler());
  Dataset labeled = scaled.EmptyLike();
  PatientRecord record;
  record.values = CohortScaler().ScaleRow(raw);
  record.label = Label::kCkd;
  labeled.records.push_back(record);
  const double p = model.Predict(record.values);
  const auto entries = AnalyzeErrors(model, labeled, p + 0.1, SubsampleBackground(scaled, 64, 1),
                                     &scaled);
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].dominant_feature, static_cast<size_t>(ckd::kEGFR));
  EXPECT_TRUE(entries[0].present_risk_factors.empty());
  EXPECT_FALSE(entries[0].absent_risk_factors.empty());
}

}  // namespace
}  // namespace nephroscope
