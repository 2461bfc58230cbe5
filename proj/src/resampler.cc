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

#include "nephroscope/resampler.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "nephroscope/random.h"
#include "nephroscope/status.h"

namespace nephroscope {
namespace {

constexpr char kModule[] = "resampler";

double Median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

SmoteNcSampler::SmoteNcSampler(const Dataset& train, size_t k_neighbors)
    : train_(train), k_(k_neighbors) {
  if (train.provenance != Provenance::kScaled) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "SMOTE-NC expects scaled training data, got provenance '" +
                    std::string(ProvenanceName(train.provenance)) + "'");
  }
  const ClassCounts counts = train.CountClasses();
  if (counts.unlabeled > 0) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "training records must be labeled");
  }
  if (counts.positive == 0 || counts.negative == 0) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "single-class input: both classes must be present");
  }
  minority_ = counts.positive <= counts.negative ? Label::kCkd : Label::kNoCkd;
  slot_of_.assign(train.size(), -1);
  for (size_t i = 0; i < train.size(); ++i) {
    if (*train.records[i].label == minority_) {
      slot_of_[i] = static_cast<int>(minority_indices_.size());
      minority_indices_.push_back(i);
    }
  }
  if (k_ < 1 || k_ >= minority_indices_.size()) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "k_neighbors=" + std::to_string(k_) +
                    " must be in [1, minority count - 1] (minority count " +
                    std::to_string(minority_indices_.size()) + ")");
  }
  numeric_ = train.schema.NumericIndices();
  binary_ = train.schema.BinaryIndices();

  if (numeric_.empty()) {
    categorical_penalty_ = 1.0;
  } else {
    std::vector<double> stddevs;
    const double m = static_cast<double>(minority_indices_.size());
    for (size_t f : numeric_) {
      double mean = 0.0;
      for (size_t i : minority_indices_) mean += train.records[i].values[f];
      mean /= m;
      double var = 0.0;
      for (size_t i : minority_indices_) {
        const double d = train.records[i].values[f] - mean;
        var += d * d;
      }
      stddevs.push_back(std::sqrt(var / m));
    }
    categorical_penalty_ = Median(std::move(stddevs));
  }

  // Exact neighbor search; minority sets here are a few hundred records.
  const size_t m = minority_indices_.size();
  neighbors_.resize(m);
  std::vector<std::pair<double, size_t>> candidates;
  for (size_t a = 0; a < m; ++a) {
    candidates.clear();
    const auto& base = train.records[minority_indices_[a]];
    for (size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      candidates.emplace_back(Distance(base, train.records[minority_indices_[b]]),
                              minority_indices_[b]);
    }
    std::partial_sort(candidates.begin(), candidates.begin() + k_, candidates.end());
    for (size_t j = 0; j < k_; ++j) neighbors_[a].push_back(candidates[j].second);
  }
}

const std::vector<size_t>& SmoteNcSampler::Neighbors(size_t base) const {
  if (base >= slot_of_.size() || slot_of_[base] < 0) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "record " + std::to_string(base) + " is not a minority record");
  }
  return neighbors_[slot_of_[base]];
}

double SmoteNcSampler::Distance(const PatientRecord& a, const PatientRecord& b) const {
  double sum = 0.0;
  for (size_t f : numeric_) {
    const double d = a.values[f] - b.values[f];
    sum += d * d;
  }
  const double penalty_sq = categorical_penalty_ * categorical_penalty_;
  for (size_t f : binary_) {
    if (a.values[f] != b.values[f]) sum += penalty_sq;
  }
  return std::sqrt(sum);
}

PatientRecord SmoteNcSampler::Synthesize(size_t base, size_t neighbor,
                                         double gap) const {
  const auto& neighbors = Neighbors(base);
  const auto& x = train_.records[base];
  const auto& n = train_.records.at(neighbor);
  PatientRecord out;
  out.values = x.values;
  out.label = minority_;
  out.id = x.id;
  out.synthetic = true;
  for (size_t f : numeric_) {
    out.values[f] = x.values[f] + gap * (n.values[f] - x.values[f]);
  }
  for (size_t f : binary_) {
    size_t ones = 0;
    for (size_t j : neighbors) ones += train_.records[j].values[f] == 1.0 ? 1 : 0;
    const size_t zeros = neighbors.size() - ones;
    if (ones > zeros) {
      out.values[f] = 1.0;
    } else if (zeros > ones) {
      out.values[f] = 0.0;
    }
  }
  return out;
}

SmoteResult SmoteNc(const Dataset& train, const ResampleConfig& config) {
  if (!(config.target_ratio > 0.0 && config.target_ratio <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "target_ratio must lie in (0, 1]");
  }
  SmoteNcSampler sampler(train, config.k_neighbors);
  const ClassCounts counts = train.CountClasses();
  const size_t minority_count = std::min(counts.positive, counts.negative);
  const size_t majority_count = std::max(counts.positive, counts.negative);
  const auto wanted = static_cast<size_t>(
      std::llround(config.target_ratio * static_cast<double>(majority_count)));
  const size_t to_generate = wanted > minority_count ? wanted - minority_count : 0;

  SmoteResult result{train, {}, sampler.minority()};
  result.dataset.provenance = Provenance::kResampled;
  result.dataset.records.reserve(train.size() + to_generate);
  result.origins.reserve(to_generate);

  Rng rng(config.seed);
  const auto& bases = sampler.minority_indices();
  for (size_t s = 0; s < to_generate; ++s) {
    const size_t base = bases[rng.UniformInt(bases.size())];
    const auto& neighbors = sampler.Neighbors(base);
    const size_t neighbor = neighbors[rng.UniformInt(neighbors.size())];
    const double gap = rng.UniformClosed();
    result.dataset.records.push_back(sampler.Synthesize(base, neighbor, gap));
    result.origins.push_back({base, neighbor, gap});
  }
  return result;
}

}  // namespace nephroscope
