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

// SMOTE-NC oversampling for mixed numeric / binary tables.

#ifndef NEPHROSCOPE_RESAMPLER_H_
#define NEPHROSCOPE_RESAMPLER_H_

#include <cstdint>
#include <vector>

#include "nephroscope/dataset.h"

namespace nephroscope {

struct ResampleConfig {
  size_t k_neighbors = 5;
  // Minority / majority count ratio after resampling, in (0, 1].
  double target_ratio = 1.0;
  uint64_t seed = 42;
};

// How one synthetic record was built. Indices refer to the input dataset.
struct SyntheticOrigin {
  size_t base = 0;
  size_t neighbor = 0;
  double gap = 0.0;
};

struct SmoteResult {
  // Original records first (unchanged, same order), then synthetic ones.
  Dataset dataset;
  // origins[i] describes dataset.records[original_count + i].
  std::vector<SyntheticOrigin> origins;
  Label minority = Label::kCkd;
};

// Precomputes minority neighborhoods and synthesizes individual records.
// Distance: Euclidean over numeric features; every mismatched binary feature
// adds the median of the minority numeric standard deviations to the sum of
// squares as Med^2.
class SmoteNcSampler {
 public:
  SmoteNcSampler(const Dataset& train, size_t k_neighbors);

  Label minority() const { return minority_; }
  // Indices (into the input dataset) of the minority records.
  const std::vector<size_t>& minority_indices() const { return minority_indices_; }
  // k nearest minority neighbors of the minority record at `base`, nearest
  // first (ties by lower index).
  const std::vector<size_t>& Neighbors(size_t base) const;
  double categorical_penalty() const { return categorical_penalty_; }

  double Distance(const PatientRecord& a, const PatientRecord& b) const;

  // Numeric features: base + gap * (neighbor - base). Binary features:
  // majority vote over the k neighbors of `base`, ties keep the base value.
  PatientRecord Synthesize(size_t base, size_t neighbor, double gap) const;

 private:
  const Dataset& train_;
  size_t k_;
  Label minority_ = Label::kCkd;
  std::vector<size_t> minority_indices_;
  std::vector<size_t> numeric_;
  std::vector<size_t> binary_;
  double categorical_penalty_ = 0.0;
  // Parallel to minority_indices_.
  std::vector<std::vector<size_t>> neighbors_;
  std::vector<int> slot_of_;  // dataset index -> minority slot or -1
};

SmoteResult SmoteNc(const Dataset& train, const ResampleConfig& config);

}  // namespace nephroscope

#endif  // NEPHROSCOPE_RESAMPLER_H_
