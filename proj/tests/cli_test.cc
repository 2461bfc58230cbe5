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


// Runs the installed command-line tool as a subprocess.

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult RunCli(const std::string& args) {
  const std::string command = std::string(NEPHROSCOPE_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(command.c_str(), "r");
  RunResult result;
  if (pipe == nullptr) return result;
  std::array<char, 4096> buffer;
  size_t n = 0;
  while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0) result.out.append(buffer.data(), n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fs::temp_directory_path() / ("nephroscope-cli-" + std::to_string(getpid())));
    fs::create_directories(*dir_);
    WriteFile(*dir_ / "fast.json", R"({"seed": 7,
      "models": [{"kind": "logistic", "grid": {"l2": [0.01]}}],
      "cross_validation": {"folds": 3}})");
    const RunResult gen = RunCli("generate --out " + Path("cohort.csv"));
    ASSERT_EQ(gen.exit_code, 0);
    const RunResult train = RunCli("train --data " + Path("cohort.csv") + " --config " +
                                Path("fast.json") + " --out-dir " + Path("run") +
                                " --format json");
    ASSERT_EQ(train.exit_code, 0) << train.out;
    train_doc_ = new json(json::parse(train.out));
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
    delete train_doc_;
  }
  static std::string Path(const std::string& name) { return (*dir_ / name).string(); }
  static std::string Model() { return Path("run/model.json"); }

  static fs::path* dir_;
  static json* train_doc_;
};

fs::path* CliTest::dir_ = nullptr;
json* CliTest::train_doc_ = nullptr;

TEST_F(CliTest, GenerateMatchesShippedCohort) {
  std::ifstream a(Path("cohort.csv"), std::ios::binary);
  std::ifstream b(fs::path(NEPHROSCOPE_SOURCE_DIR) / "data" / "synthetic_ckd.csv", std::ios::binary);
  const std::string generated((std::istreambuf_iterator<char>(a)), {});
  const std::string shipped((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(generated, shipped);
}

TEST_F(CliTest, TrainJson) {
  EXPECT_EQ((*train_doc_)["manifest"]["seed"], 7);
  EXPECT_TRUE(fs::exists(Path("run/pool.csv")));
  const RunResult text = RunCli("train --data " + Path("cohort.csv") + " --config " +
                             Path("fast.json") + " --out-dir " + Path("run_text"));
  EXPECT_EQ(text.exit_code, 0);
  EXPECT_NE(text.out.find("rocauc"), std::string::npos);
}

TEST_F(CliTest, SeedFlagOverridesConfig) {
  const RunResult r = RunCli("train --data " + Path("cohort.csv") + " --config " + Path("fast.json") +
                          " --seed 11 --out-dir " + Path("run_seed") + " --format json");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(json::parse(r.out)["manifest"]["seed"], 11);
}

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(RunCli("").exit_code, 1);
  EXPECT_EQ(RunCli("frobnicate").exit_code, 1);
  EXPECT_EQ(RunCli("train").exit_code, 1);
  EXPECT_EQ(RunCli("explain pdp --model " + Model() + " --data " + Path("cohort.csv")).exit_code, 1);
  EXPECT_EQ(RunCli("explain anchor --model " + Model() + " --data " + Path("cohort.csv")).exit_code,
            1);
  EXPECT_EQ(RunCli("explain pdp height --model " + Model() + " --data " + Path("cohort.csv"))
                .exit_code,
            1);
  EXPECT_EQ(RunCli("train --data " + Path("cohort.csv") + " --format yaml").exit_code, 1);
  WriteFile(*dir_ / "bad.json", R"({"sede": 3})");
  EXPECT_EQ(RunCli("train --data " + Path("cohort.csv") + " --config " + Path("bad.json")).exit_code,
            1);
}

TEST_F(CliTest, DataErrorsExitTwo) {
  WriteFile(*dir_ / "broken.csv", "gender,age\n2,40\n");
  EXPECT_EQ(RunCli("train --data " + Path("broken.csv")).exit_code, 2);
  EXPECT_EQ(RunCli("safety --model " + Path("cohort.csv")).exit_code, 2);
  WriteFile(*dir_ / "malformed.yaml", "cases: [1, 2\n");
  EXPECT_EQ(RunCli("safety --model " + Model() + " --suite " + Path("malformed.yaml")).exit_code, 2);
}

TEST_F(CliTest, SafetyExitCodes) {
  const RunResult bundled = RunCli("safety --model " + Model() + " --format json --out-dir " +
                                Path("safety"));
  EXPECT_EQ(bundled.exit_code, 0) << bundled.out;
  EXPECT_EQ(json::parse(bundled.out)["verdicts"].size(), 5u);
  EXPECT_TRUE(fs::exists(Path("safety/safety_report.json")));

  WriteFile(*dir_ / "inverted.yaml", R"(name: inverted
cases:
  - id: flipped
    severity: blocking
    expectation: {class: CKD}
    input: {gender: 0, age: 25, DM: 0, CHD: 0, Vascular_disease: 0, smoking: 0, HT: 0, DLP: 0,
            Obesity: 0, DLP_meds: 0, DM_meds: 0, HT_meds: 0, ACEI_ARB: 0, Chol: 3.1, TG: 0.68,
            HbA1C: 5, Cr: 61, eGFR: 123, SBP: 120, DBP: 80, BMI: 19}
)");
  EXPECT_EQ(RunCli("safety --model " + Model() + " --suite " + Path("inverted.yaml")).exit_code, 3);
}

TEST_F(CliTest, ExplainModes) {
  const std::string common = " --model " + Model() + " --data " + Path("cohort.csv") + " --format json";
  const RunResult pdp = RunCli("explain pdp eGFR" + common + " --out-dir " + Path("pdp"));
  ASSERT_EQ(pdp.exit_code, 0);
  EXPECT_EQ(json::parse(pdp.out)["feature"], "eGFR");
  EXPECT_TRUE(fs::exists(Path("pdp/pdp.json")));
  const RunResult cf = RunCli("explain counterfactual 3" + common + " --pool " + Path("run/pool.csv"));
  ASSERT_EQ(cf.exit_code, 0);
  EXPECT_TRUE(json::parse(cf.out).contains("found"));
  const RunResult global = RunCli("explain global" + common);
  ASSERT_EQ(global.exit_code, 0);
  EXPECT_NO_THROW(json::parse(global.out));
}

TEST_F(CliTest, ReportCommand) {
  const RunResult r = RunCli("report --model " + Model() + " --data " + Path("cohort.csv") +
                          " --format json");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_GT(json::parse(r.out)["metrics"]["rocauc"].get<double>(), 0.5);
}

}  // namespace
