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

#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nephroscope/dataset.h"
#include "nephroscope/schema.h"
#include "nephroscope/status.h"
#include "testing/test_util.h"

namespace nephroscope {
namespace {

using testing::SyntheticCohortRaw;
using testing::ToySchema;

std::vector<std::string> SplitLines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<std::string> SplitCells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  return cells;
}

std::string JoinCells(const std::vector<std::string>& cells) {
  std::string out;
  for (size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
  return out;
}

// First `rows` synthetic records as CSV, with cell (row, column) replaced
// when `column` is non-empty.
std::string CohortCsv(size_t rows, const std::string& column = "", size_t row = 0,
                      const std::string& value = "") {
  auto lines = SplitLines(FormatCsv(SyntheticCohortRaw()));
  lines.resize(rows + 1);
  if (!column.empty()) {
    const auto header = SplitCells(lines[0]);
    const auto at = std::find(header.begin(), header.end(), column) - header.begin();
    auto cells = SplitCells(lines[row + 1]);
    cells[at] = value;
    lines[row + 1] = JoinCells(cells);
  }
  std::string out;
  for (const auto& line : lines) out += line + "\n";
  return out;
}

Dataset Imputed(const FeatureSchema& schema, const std::vector<std::vector<double>>& rows) {
  Dataset data = testing::MakeDataset(schema, rows);
  data.provenance = Provenance::kImputed;
  return data;
}

TEST(ParseCsvTest, FullCohortKeepsClassBalance) {
  const Dataset parsed = ParseCsv(FormatCsv(SyntheticCohortRaw()), CkdSchema());
  EXPECT_EQ(parsed.size(), 491u);
  const ClassCounts counts = parsed.CountClasses();
  EXPECT_EQ(counts.positive, 56u);
  EXPECT_NEAR(counts.positive_fraction(), 0.114, 5e-4);
}

TEST(ParseCsvTest, HeaderOnlyGivesEmptyDataset) {
  const auto header = SplitLines(FormatCsv(SyntheticCohortRaw()))[0];
  const Dataset parsed = ParseCsv(header + "\n", CkdSchema());
  EXPECT_TRUE(parsed.empty());
}

TEST(ParseCsvTest, InvalidBinaryNamesRowAndColumn) {
  try {
    ParseCsv(CohortCsv(5, "gender", 2, "2"), CkdSchema());
    FAIL() << "expected an encoding error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDataError);
    const std::string what = e.what();
    EXPECT_NE(what.find("row 3"), std::string::npos) << what;
    EXPECT_NE(what.find("'gender'"), std::string::npos) << what;
  }
}

TEST(ParseCsvTest, BinaryWordsAreAccepted) {
  const Dataset parsed = ParseCsv(CohortCsv(3, "gender", 1, "man"), CkdSchema());
  EXPECT_EQ(parsed.records[1].values[ckd::kGender], 1.0);
  const Dataset woman = ParseCsv(CohortCsv(3, "DM", 0, "no"), CkdSchema());
  EXPECT_EQ(woman.records[0].values[ckd::kDM], 0.0);
}

TEST(ParseCsvTest, MissingCellsOnlyWhereAllowed) {
  const Dataset parsed = ParseCsv(CohortCsv(4, "HbA1C", 0, ""), CkdSchema());
  EXPECT_TRUE(IsMissing(parsed.records[0].values[ckd::kHbA1C]));
  EXPECT_THROW(ParseCsv(CohortCsv(4, "eGFR", 0, "NA"), CkdSchema()), Error);
}

TEST(ParseCsvTest, OutOfRangeValueIsAWarning) {
  ValidationReport report;
  const Dataset parsed = ParseCsv(CohortCsv(4, "age", 1, "190"), CkdSchema(), &report);
  EXPECT_EQ(parsed.records[1].values[ckd::kAge], 190.0);
  ASSERT_EQ(report.warnings.size(), 1u);
  EXPECT_EQ(report.warnings[0].row, 1u);
  EXPECT_EQ(report.warnings[0].column, "age");
}

TEST(ParseCsvTest, ColumnsAreMatchedByName) {
  EXPECT_THROW(ParseCsv("gender,Label\n0,no\n", CkdSchema()), Error);
  const FeatureSchema schema = ToySchema(1, 1);
  const Dataset parsed = ParseCsv("b0,X0,Label\nyes,2.5,no\n", schema);
  EXPECT_EQ(parsed.records[0].values[0], 2.5);
  EXPECT_EQ(parsed.records[0].values[1], 1.0);
  EXPECT_THROW(ParseCsv("x0,b0,extra\n1,0,3\n", schema), Error);
}

TEST(ParseCsvTest, FormatRoundTrip) {
  const Dataset& cohort = SyntheticCohortRaw();
  const Dataset again = ParseCsv(FormatCsv(cohort), CkdSchema());
  ASSERT_EQ(again.size(), cohort.size());
  for (size_t r = 0; r < cohort.size(); ++r) {
    EXPECT_EQ(again.records[r].label, cohort.records[r].label);
    for (size_t f = 0; f < CkdSchema().size(); ++f) {
      const double a = cohort.records[r].values[f];
      const double b = again.records[r].values[f];
      if (IsMissing(a)) {
        EXPECT_TRUE(IsMissing(b));
      } else {
        EXPECT_EQ(a, b);
      }
    }
  }
}

// HbA1C grouped by DM, TG grouped by DLP.
FeatureSchema ImputationSchema() {
  std::vector<FeatureSpec> specs(4);
  specs[0].name = "DM";
  specs[0].kind = FeatureKind::kBinary;
  specs[1].name = "HbA1C";
  specs[1].missing_allowed = true;
  specs[2].name = "DLP";
  specs[2].kind = FeatureKind::kBinary;
  specs[3].name = "TG";
  specs[3].missing_allowed = true;
  return FeatureSchema(specs);
}

Dataset RawOf(const FeatureSchema& schema, const std::vector<std::vector<double>>& rows) {
  Dataset data = testing::MakeDataset(schema, rows);
  data.provenance = Provenance::kRaw;
  return data;
}

TEST(ImputeTest, GroupMeanFillsMissingCells) {
  const FeatureSchema schema = ImputationSchema();
  const Dataset raw = RawOf(schema, {{0, 5.2, 1, 1.52},
                                     {0, 5.6, 1, 0.99},
                                     {0, kMissing, 1, 1.44},
                                     {1, 7.0, 1, kMissing},
                                     {1, 8.0, 0, 2.0}});
  const Dataset imputed = ImputeGroupMean(raw);
  EXPECT_EQ(imputed.provenance, Provenance::kImputed);
  EXPECT_DOUBLE_EQ(imputed.records[2].values[1], 5.4);
  EXPECT_DOUBLE_EQ(imputed.records[3].values[3], (1.52 + 0.99 + 1.44) / 3.0);
  EXPECT_NEAR(imputed.records[3].values[3], 1.3166666, 1e-6);
  // Non-missing cells are untouched.
  for (size_t r = 0; r < raw.size(); ++r) {
    for (size_t f = 0; f < schema.size(); ++f) {
      if (!IsMissing(raw.records[r].values[f])) {
        EXPECT_EQ(imputed.records[r].values[f], raw.records[r].values[f]);
      }
    }
  }
  const Dataset twice = ImputeGroupMean(imputed);
  for (size_t r = 0; r < raw.size(); ++r) {
    EXPECT_EQ(twice.records[r].values, imputed.records[r].values);
  }
}

TEST(ImputeTest, CompleteDatasetIsUnchanged) {
  const FeatureSchema schema = ImputationSchema();
  const Dataset raw = RawOf(schema, {{0, 5.2, 1, 1.5}, {1, 7.1, 0, 2.5}});
  const Dataset imputed = ImputeGroupMean(raw);
  for (size_t r = 0; r < raw.size(); ++r) {
    EXPECT_EQ(imputed.records[r].values, raw.records[r].values);
  }
}

TEST(ImputeTest, EmptyDonorGroupIsAnError) {
  const FeatureSchema schema = ImputationSchema();
  const Dataset raw = RawOf(schema, {{0, 5.2, 1, 1.5}, {1, kMissing, 0, 2.5}});
  try {
    ImputeGroupMean(raw);
    FAIL() << "expected imputation failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDataError);
    EXPECT_NE(std::string(e.what()).find("DM=1"), std::string::npos) << e.what();
  }
}

TEST(ImputeTest, SyntheticCohortBecomesComplete) {
  const Dataset imputed = ImputeGroupMean(SyntheticCohortRaw());
  for (const auto& record : imputed.records) {
    for (double v : record.values) EXPECT_FALSE(IsMissing(v));
  }
}

TEST(ScalerTest, MinMaxDefinition) {
  const FeatureSchema schema = ToySchema(1, 1);
  const Dataset data = Imputed(schema, {{10, 0}, {20, 1}, {12, 1}});
  const ScalerParams scaler = FitScaler(data);
  EXPECT_EQ(scaler.Scale(0, 10), 0.0);
  EXPECT_EQ(scaler.Scale(0, 20), 1.0);
  EXPECT_EQ(scaler.Scale(0, 15), 0.5);
  EXPECT_GT(scaler.Scale(0, 25), 1.0);
  EXPECT_FALSE(scaler.scaled[1]);
  EXPECT_EQ(scaler.Scale(1, 1.0), 1.0);
}

TEST(ScalerTest, ConstantFeatureIsDegenerate) {
  const Dataset data = Imputed(ToySchema(2), {{5, 1}, {5, 2}, {5, 3}});
  try {
    FitScaler(data);
    FAIL() << "expected degenerate-feature error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerate);
    EXPECT_NE(std::string(e.what()).find("x0"), std::string::npos);
  }
}

TEST(ScalerTest, ApplyThenInvertRoundTrips) {
  const Dataset imputed = ImputeGroupMean(SyntheticCohortRaw());
  const ScalerParams scaler = FitScaler(imputed);
  const Dataset scaled = ApplyScaler(imputed, scaler);
  for (const auto& record : scaled.records) {
    for (size_t f = 0; f < record.values.size(); ++f) {
      EXPECT_GE(record.values[f], 0.0);
      EXPECT_LE(record.values[f], 1.0);
    }
  }
  const Dataset back = InvertScaler(scaled);
  for (size_t r = 0; r < imputed.size(); ++r) {
    for (size_t f = 0; f < CkdSchema().size(); ++f) {
      EXPECT_NEAR(back.records[r].values[f], imputed.records[r].values[f], 1e-12);
    }
  }
  EXPECT_THROW(ApplyScaler(scaled, scaler), Error);
}

TEST(ScalerTest, EgfrAnchorPoints) {
  ScalerParams scaler;
  scaler.min = {60.56};
  scaler.max = {242.38};
  scaler.scaled = {true};
  EXPECT_NEAR(scaler.Scale(0, 86.0), 0.14, 0.005);
  EXPECT_NEAR(scaler.Scale(0, 106.0), 0.25, 0.005);
  EXPECT_NEAR(scaler.Unscale(0, scaler.Scale(0, 86.0)), 86.0, 1e-12);
}

TEST(SplitTest, CohortTestPartitionHasElevenOrTwelvePositives) {
  const Dataset imputed = ImputeGroupMean(SyntheticCohortRaw());
  const auto [train, test] = SplitStratified(imputed, 0.2, 42);
  const size_t positives = test.CountClasses().positive;
  EXPECT_TRUE(positives == 11 || positives == 12) << positives;
  EXPECT_EQ(train.size() + test.size(), imputed.size());
  std::multiset<int64_t> ids;
  for (const auto& r : train.records) ids.insert(r.id);
  for (const auto& r : test.records) ids.insert(r.id);
  EXPECT_EQ(ids.size(), imputed.size());
  EXPECT_EQ(std::set<int64_t>(ids.begin(), ids.end()).size(), imputed.size());
}

TEST(SplitTest, SameSeedSamePartition) {
  const Dataset imputed = ImputeGroupMean(SyntheticCohortRaw());
  const auto a = SplitStratified(imputed, 0.2, 7);
  const auto b = SplitStratified(imputed, 0.2, 7);
  ASSERT_EQ(a.second.size(), b.second.size());
  for (size_t i = 0; i < a.second.size(); ++i) {
    EXPECT_EQ(a.second.records[i].id, b.second.records[i].id);
  }
}

TEST(SplitTest, HalfSplitOfBalancedTen) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 10; ++i) {
    rows.push_back({static_cast<double>(i)});
    labels.push_back(i % 2);
  }
  Dataset data = testing::MakeDataset(ToySchema(1), rows, labels);
  const auto [train, test] = SplitStratified(data, 0.5, 1);
  EXPECT_EQ(train.size(), 5u);
  EXPECT_EQ(test.size(), 5u);
  EXPECT_EQ(test.CountClasses().positive + train.CountClasses().positive, 5u);
  EXPECT_GE(test.CountClasses().positive, 2u);
  EXPECT_LE(test.CountClasses().positive, 3u);
}

TEST(SplitTest, RejectsBadInputs) {
  Dataset data = testing::MakeDataset(ToySchema(1), {{0}, {1}, {2}}, {0, 0, 1});
  EXPECT_THROW(SplitStratified(data, 0.3, 1), Error);
  Dataset ok = testing::MakeDataset(ToySchema(1), {{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
  EXPECT_THROW(SplitStratified(ok, 1.0, 1), Error);
}

TEST(FoldsTest, EveryFoldHoldsBothClasses) {
  const Dataset imputed = ImputeGroupMean(SyntheticCohortRaw());
  const auto folds = StratifiedFolds(imputed, 5, 3);
  ASSERT_EQ(folds.size(), imputed.size());
  std::vector<size_t> positives(5, 0);
  std::vector<size_t> sizes(5, 0);
  for (size_t i = 0; i < folds.size(); ++i) {
    ASSERT_LT(folds[i], 5u);
    ++sizes[folds[i]];
    if (imputed.records[i].label == Label::kCkd) ++positives[folds[i]];
  }
  for (size_t k = 0; k < 5; ++k) {
    EXPECT_GE(positives[k], 11u);
    EXPECT_LE(positives[k], 12u);
    EXPECT_GE(sizes[k], 98u);
    EXPECT_LE(sizes[k], 99u);
  }
}

}  // namespace
}  // namespace nephroscope
