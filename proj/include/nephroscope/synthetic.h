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

// Schema-identical synthetic cohort with a planted risk structure. Used for
// tests, demos and the acceptance run when the clinical CSV is unavailable.
//
// Outcome log-odds:
//   b0 + 2.0 DM_meds + 1.6 ACEI_ARB + 1.0 DM + 0.6 (HbA1C - 6)
//      - 0.07 (eGFR - 95) + 0.03 (age - 55) + 0.6 HT_meds + 0.4 CHD
// with b0 chosen so that exactly round(rows * prevalence) records are
// positive.

#ifndef NEPHROSCOPE_SYNTHETIC_H_
#define NEPHROSCOPE_SYNTHETIC_H_

#include <cstdint>
#include <span>
#include <vector>

#include "nephroscope/dataset.h"

namespace nephroscope {

struct SyntheticConfig {
  size_t rows = 491;
  double prevalence = 0.114;
  uint64_t seed = 42;
  double hba1c_missing_rate = 0.08;
  double tg_missing_rate = 0.05;
};

struct SyntheticCohort {
  Dataset dataset;  // raw, canonical schema, labeled
  double intercept = 0.0;
  // Planted outcome probability per record, from complete values.
  std::vector<double> true_probability;
};

SyntheticCohort GenerateSynthetic(const SyntheticConfig& config = {});

// Planted log-odds without the intercept, on a complete raw record.
double PlantedRiskScore(std::span<const double> raw);

}  // namespace nephroscope

#endif  // NEPHROSCOPE_SYNTHETIC_H_
