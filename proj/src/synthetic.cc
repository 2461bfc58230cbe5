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

#include "nephroscope/synthetic.h"

#include <algorithm>
#include <cmath>

#include "nephroscope/model.h"
#include "nephroscope/random.h"
#include "nephroscope/schema.h"
#include "nephroscope/status.h"

namespace nephroscope {
namespace {

using namespace ckd;

double Clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }
// Division by a power of ten yields the double nearest the decimal value.
double Round(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}
double Flag(bool b) { return b ? 1.0 : 0.0; }

std::vector<double> DrawPatient(Rng& rng) {
  std::vector<double> x(kFeatureCount, 0.0);
  const bool man = rng.Bernoulli(0.5);
  const double age = Clamp(std::round(rng.Normal(54.0, 12.0)), 23.0, 89.0);
  const double da = age - 54.0;
  const bool dm = rng.Bernoulli(Logistic(-0.9 + 0.03 * da));
  const bool ht = rng.Bernoulli(Logistic(0.1 + 0.05 * da));
  const bool dlp = rng.Bernoulli(0.6);
  const bool chd = rng.Bernoulli(Logistic(-2.8 + 0.04 * da + (man ? 0.4 : 0.0)));
  const bool vascular = rng.Bernoulli(0.04);
  const bool smoking = rng.Bernoulli(man ? 0.2 : 0.04);
  const double bmi = Clamp(Round(rng.Normal(30.0, 5.5), 1), 16.0, 55.0);

  x[kGender] = Flag(man);
  x[kAge] = age;
  x[kDM] = Flag(dm);
  x[kCHD] = Flag(chd);
  x[kVascularDisease] = Flag(vascular);
  x[kSmoking] = Flag(smoking);
  x[kHT] = Flag(ht);
  x[kDLP] = Flag(dlp);
  x[kObesity] = Flag(bmi >= 30.0);
  x[kDLPMeds] = Flag(dlp ? rng.Bernoulli(0.85) : rng.Bernoulli(0.04));
  x[kDMMeds] = Flag(dm ? rng.Bernoulli(0.8) : rng.Bernoulli(0.01));
  x[kHTMeds] = Flag(ht ? rng.Bernoulli(0.85) : rng.Bernoulli(0.03));
  x[kACEIARB] = Flag(ht ? rng.Bernoulli(0.55) : rng.Bernoulli(dm ? 0.2 : 0.03));
  x[kChol] = Clamp(Round(rng.Normal(5.0, 1.1), 2), 2.0, 10.0);
  x[kTG] = Clamp(Round(std::exp(rng.Normal(std::log(1.3) + (dlp ? 0.25 : 0.0), 0.45)), 2),
                 0.3, 8.0);
  x[kHbA1C] = dm ? Clamp(Round(rng.Normal(7.4, 1.3), 1), 5.5, 14.0)
                 : Clamp(Round(rng.Normal(5.7, 0.4), 1), 4.3, 6.4);
  const double egfr = Clamp(rng.Normal(100.0 - 0.6 * da, 17.0), 60.6, 180.0);
  x[kEGFR] = Round(egfr, 2);
  x[kCr] = Round(7000.0 / egfr * (man ? 1.15 : 0.9) * std::exp(rng.Normal(0.0, 0.08)), 2);
  const double sbp = Clamp(std::round(rng.Normal(128.0 + (ht ? 10.0 : 0.0), 15.0)), 90.0, 210.0);
  x[kSBP] = sbp;
  x[kDBP] = Clamp(std::round(rng.Normal(77.0 + 0.3 * (sbp - 128.0), 9.0)), 45.0, 120.0);
  x[kBMI] = bmi;
  return x;
}

size_t PositivesAt(double intercept, const std::vector<double>& scores,
                   const std::vector<double>& uniforms) {
  size_t count = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (uniforms[i] < Logistic(intercept + scores[i])) ++count;
  }
  return count;
}

}  // namespace

double PlantedRiskScore(std::span<const double> x) {
  if (x.size() != kFeatureCount) {
    throw Error(ErrorCode::kSchemaMismatch, "data_core", "planted score needs a full CKD record");
  }
  return 2.0 * x[kDMMeds] + 1.6 * x[kACEIARB] + 1.0 * x[kDM] + 0.6 * (x[kHbA1C] - 6.0) -
         0.07 * (x[kEGFR] - 95.0) + 0.03 * (x[kAge] - 55.0) + 0.6 * x[kHTMeds] +
         0.4 * x[kCHD];
}

SyntheticCohort GenerateSynthetic(const SyntheticConfig& config) {
  if (config.rows < 10) throw Error(ErrorCode::kInvalidArgument, "data_core", "need at least 10 rows");
  if (!(config.prevalence > 0.0 && config.prevalence < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "data_core", "prevalence must be in (0, 1)");
  }
  Rng rng(MixSeed(config.seed, 0x5717));
  std::vector<std::vector<double>> rows;
  std::vector<double> scores;
  std::vector<double> uniforms;
  for (size_t i = 0; i < config.rows; ++i) {
    rows.push_back(DrawPatient(rng));
    scores.push_back(PlantedRiskScore(rows.back()));
    uniforms.push_back(rng.Uniform());
  }

  // The positive count is a non-decreasing step function of the intercept.
  const auto target = static_cast<size_t>(
      std::llround(static_cast<double>(config.rows) * config.prevalence));
  double lo = -60.0;
  double hi = 60.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (PositivesAt(mid, scores, uniforms) >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  SyntheticCohort cohort{Dataset(CkdSchema()), hi, {}};
  for (size_t i = 0; i < config.rows; ++i) {
    const double p = Logistic(hi + scores[i]);
    PatientRecord record;
    record.values = rows[i];
    record.label = uniforms[i] < p ? Label::kCkd : Label::kNoCkd;
    record.id = static_cast<int64_t>(i);
    cohort.true_probability.push_back(p);
    cohort.dataset.records.push_back(std::move(record));
  }
  // Missingness is drawn after labelling so that it does not shift labels.
  for (auto& record : cohort.dataset.records) {
    if (rng.Bernoulli(config.hba1c_missing_rate)) record.values[kHbA1C] = kMissing;
    if (rng.Bernoulli(config.tg_missing_rate)) record.values[kTG] = kMissing;
  }
  return cohort;
}

}  // namespace nephroscope
