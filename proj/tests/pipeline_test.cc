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

#include <filesystem>
#include <string>

#include <json.hpp>

#include "nephroscope/digest.h"
#include "nephroscope/pipeline.h"
#include "nephroscope/report.h"
#include "nephroscope/status.h"
#include "nephroscope/synthetic.h"
#include "testing/test_util.h"

namespace nephroscope {
namespace {

using nlohmann::json;

constexpr char kFastConfig[] = R"({
  "seed": 7,
  "models": [
    {"kind": "logistic", "grid": {"l2": [0.01, 0.1]}},
    {"kind": "tree", "grid": {"max_depth": [3, 4]}}
  ],
  "cross_validation": {"folds": 3}
})";

TEST(ConfigTest, CanonicalFormRoundTrips) {
  const PipelineConfig defaults = PipelineConfig::Defaults();
  const std::string text = defaults.ToJson();
  EXPECT_EQ(PipelineConfig::FromJson(text).ToJson(), text);
  EXPECT_EQ(PipelineConfig::FromJson("{}").ToJson(), text);
  EXPECT_EQ(PipelineConfig::FromJson(text).Digest(), defaults.Digest());
  const PipelineConfig fast = PipelineConfig::FromJson(kFastConfig);
  EXPECT_EQ(PipelineConfig::FromJson(fast.ToJson()).ToJson(), fast.ToJson());
  EXPECT_NE(fast.Digest(), defaults.Digest());
}

TEST(ConfigTest, ShippedDefaultFileIsCurrent) {
  EXPECT_EQ(ReadFileBytes(testing::DataDir().parent_path() / "configs" / "default.json"),
            PipelineConfig::Defaults().ToJson());
}

TEST(ConfigTest, OverridesAndSeedPropagation) {
  const PipelineConfig fast = PipelineConfig::FromJson(kFastConfig);
  EXPECT_EQ(fast.seed, 7u);
  EXPECT_EQ(fast.smote.seed, 7u);
  EXPECT_EQ(fast.attribution.seed, 7u);
  EXPECT_EQ(fast.prototypes.seed, 7u);
  EXPECT_EQ(fast.cv_folds, 3u);
  ASSERT_EQ(fast.models.size(), 2u);
  EXPECT_EQ(fast.models[1].kind, ModelKind::kTree);
  EXPECT_EQ(fast.models[1].grid.axes[0].first, "max_depth");
}

TEST(ConfigTest, RejectsUnknownOrInvalidKeys) {
  EXPECT_THROW(PipelineConfig::FromJson(R"({"sed": 1})"), Error);
  EXPECT_THROW(PipelineConfig::FromJson(R"({"smote": {"k": 3}})"), Error);
  EXPECT_THROW(PipelineConfig::FromJson(R"({"models": [{"kind": "ann"}]})"), Error);
  EXPECT_THROW(PipelineConfig::FromJson(R"({"threshold_policy": "best"})"), Error);
  EXPECT_THROW(PipelineConfig::FromJson("[1, 2"), Error);
  EXPECT_THROW(PipelineConfig::Load("/nonexistent/config.json"), Error);
}

TEST(ManifestTest, DigestIgnoresTimestamp) {
  RunManifest a;
  a.seed = 3;
  a.created_at = "2026-01-01T00:00:00Z";
  RunManifest b = a;
  b.created_at = "2026-06-01T00:00:00Z";
  EXPECT_EQ(a.Digest(), b.Digest());
  EXPECT_EQ(a.CanonicalJson().find("created_at"), std::string::npos);
  b.seed = 4;
  EXPECT_NE(a.Digest(), b.Digest());
}

TEST(SyntheticTest, PlantedStructure) {
  const SyntheticCohort cohort = GenerateSynthetic();
  EXPECT_EQ(cohort.dataset.size(), 491u);
  EXPECT_EQ(cohort.dataset.CountClasses().positive, 56u);
  const SyntheticCohort again = GenerateSynthetic();
  EXPECT_EQ(FormatCsv(cohort.dataset), FormatCsv(again.dataset));
  EXPECT_EQ(FormatCsv(cohort.dataset),
            ReadFileBytes(testing::DataDir() / "synthetic_ckd.csv"));
  SyntheticConfig other;
  other.seed = 43;
  EXPECT_NE(FormatCsv(GenerateSynthetic(other).dataset), FormatCsv(cohort.dataset));
}

TEST(TrainingTest, FastRunIsDeterministic) {
  const PipelineConfig config = PipelineConfig::FromJson(kFastConfig);
  const Dataset& raw = testing::SyntheticCohortRaw();
  const TrainResult a = RunTraining(raw, config, "digest");
  const TrainResult b = RunTraining(raw, config, "digest");
  EXPECT_EQ(SerializeBundle(a.bundle), SerializeBundle(b.bundle));
  json ja = json::parse(RenderTrainingJson(a));
  json jb = json::parse(RenderTrainingJson(b));
  ja["manifest"].erase("created_at");
  jb["manifest"].erase("created_at");
  EXPECT_EQ(ja.dump(), jb.dump());
  EXPECT_EQ(a.candidates.size(), 2u);
  EXPECT_EQ(a.train_size + a.test_size, raw.size());
  EXPECT_EQ(a.bundle.background.size(), kDefaultBackgroundSize);
  EXPECT_EQ(a.pool.size(), a.train_size);
  EXPECT_EQ(a.pool.provenance, Provenance::kImputed);
  for (const char* key : {"sensitivity", "specificity", "rocauc"}) EXPECT_TRUE(ja.contains(key));

  PipelineConfig reseeded = config;
  reseeded.seed = 8;
  reseeded.smote.seed = 8;
  const TrainResult c = RunTraining(raw, reseeded, "digest");
  EXPECT_NE(SerializeBundle(c.bundle), SerializeBundle(a.bundle));
}

TEST(TrainingTest, ArtifactsAreWritten) {
  const PipelineConfig config = PipelineConfig::FromJson(kFastConfig);
  const TrainResult result = RunTraining(testing::SyntheticCohortRaw(), config, "digest");
  testing::TempDir dir;
  WriteTrainingArtifacts(result, dir.path() / "out");
  for (const char* name : {"model.json", "metrics.json", "metrics.txt", "pool.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "out" / name)) << name;
  }
  const ModelBundle loaded = LoadBundle(dir.path() / "out" / "model.json");
  EXPECT_EQ(BundleDigest(loaded), BundleDigest(result.bundle));
  const Dataset pool = LoadCsv(dir.path() / "out" / "pool.csv", CkdSchema());
  EXPECT_EQ(pool.size(), result.pool.size());
}

TEST(TrainingTest, PrepareForModelMatchesTheBundleScaler) {
  const PipelineConfig config = PipelineConfig::FromJson(kFastConfig);
  const TrainResult result = RunTraining(testing::SyntheticCohortRaw(), config, "digest");
  const Dataset prepared = PrepareForModel(testing::SyntheticCohortRaw(), result.bundle, config);
  EXPECT_EQ(prepared.provenance, Provenance::kScaled);
  EXPECT_EQ(prepared.size(), 491u);
  EXPECT_TRUE(prepared.records[0].label.has_value());
  const Dataset imputed = ImputeGroupMean(testing::SyntheticCohortRaw());
  EXPECT_EQ(prepared.records[5].values, result.bundle.scaler.ScaleRow(imputed.records[5].values));
}

TEST(TrainingTest, DefaultRunReportsScreeningMetrics) {
  const TrainResult& result = testing::SyntheticTraining();
  EXPECT_EQ(result.candidates.size(), 4u);
  EXPECT_GT(result.test_metrics.sensitivity, 0.0);
  EXPECT_GT(result.test_metrics.rocauc, 0.5);
  EXPECT_EQ(result.manifest.champion, result.bundle.champion);
  EXPECT_EQ(result.manifest.threshold, result.bundle.threshold);
  // 435 negatives, 87 of them held out; SMOTE-NC balances the other 348.
  EXPECT_EQ(result.class_counts.negative, 435u);
  EXPECT_EQ(result.resampled_train_size, 2u * 348u);
}

}  // namespace
}  // namespace nephroscope
