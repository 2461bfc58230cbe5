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

// Anchor rules: conjunctions of feature predicates that hold for the
// explained instance and keep the model's prediction fixed with high
// probability.
//
// Perturbation samples keep the anchored features at the instance's values
// and draw every free feature independently from the reference marginals.
// Precision therefore depends only on the set of anchored features, and each
// feature set gets its own generator seeded by a hash of the set.

#ifndef NEPHROSCOPE_ANCHORS_H_
#define NEPHROSCOPE_ANCHORS_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nephroscope/dataset.h"
#include "nephroscope/model.h"

namespace nephroscope {

enum class PredicateOp { kLessEqual, kGreater, kEqual };

struct Predicate {
  size_t feature = 0;
  PredicateOp op = PredicateOp::kEqual;
  // Dataset (scaled) units.
  double value = 0.0;

  bool Holds(std::span<const double> row) const;
  bool operator==(const Predicate& other) const = default;
};

struct AnchorRule {
  // Sorted by feature; at most one predicate per feature.
  std::vector<Predicate> predicates;
  Label predicted_class = Label::kNoCkd;
  double precision = 0.0;
  double precision_lower = 0.0;
  double coverage = 0.0;
  size_t samples_used = 0;
  bool below_target = false;
};

class PerturbationSpace {
 public:
  // `reference` supplies the marginals, the threshold lattice and the
  // coverage denominator.
  PerturbationSpace(const Dataset& reference, uint64_t seed);

  const FeatureSchema& schema() const { return reference_.schema; }
  const Dataset& reference() const { return reference_; }
  uint64_t seed() const { return seed_; }
  const std::vector<double>& column(size_t feature) const { return columns_[feature]; }
  // Deciles 10..90 of a numeric feature, deduplicated.
  const std::vector<double>& deciles(size_t feature) const { return deciles_[feature]; }

 private:
  Dataset reference_;
  uint64_t seed_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<double>> deciles_;
};

struct AnchorOptions {
  double tau = 0.95;
  size_t beam = 2;
  size_t max_predicates = 4;
  size_t n_samples = 1000;
  double confidence = 0.95;
  double threshold = 0.5;
};

struct PrecisionEstimate {
  double precision = 0.0;
  double lower = 0.0;  // one-sided Clopper-Pearson bound
  size_t matches = 0;
  size_t samples = 0;
};

// Predicates that hold for the instance: "<= c" and "> c" for every
// numeric cut c in the deciles plus the instance value, "= v" for binary
// features.
std::vector<Predicate> CandidatePredicates(std::span<const double> instance,
                                           const PerturbationSpace& space);

// Samples with the anchored features fixed to the instance.
std::vector<std::vector<double>> SamplePerturbations(std::span<const double> instance,
                                                     std::span<const size_t> anchored,
                                                     const PerturbationSpace& space,
                                                     size_t n_samples);

PrecisionEstimate EstimatePrecision(std::span<const Predicate> predicates, const Model& model,
                                    std::span<const double> instance,
                                    const PerturbationSpace& space,
                                    const AnchorOptions& options);

double RuleCoverage(std::span<const Predicate> predicates, const Dataset& dataset);

// Bottom-up beam search. Stops at the first rule length that has a rule
// whose lower bound reaches tau and returns the widest such rule. Otherwise
// returns the best rule found, flagged below_target.
AnchorRule InduceAnchor(const Model& model, std::span<const double> instance,
                        const PerturbationSpace& space, const AnchorOptions& options = {});

// One-sided lower Clopper-Pearson bound at `confidence`.
double ClopperPearsonLower(size_t successes, size_t trials, double confidence);
// Two-sided interval with coverage `confidence`.
std::pair<double, double> ClopperPearsonInterval(size_t successes, size_t trials,
                                                 double confidence);

// "IF eGFR <= 87.74 AND DM = yes THEN CKD [precision=0.9495, coverage=0.4023, n=1000]"
// Thresholds are shown in raw units when the schema's scaler is given.
std::string FormatRule(const AnchorRule& rule, const FeatureSchema& schema,
                       const ScalerParams* scaler);

}  // namespace nephroscope

#endif  // NEPHROSCOPE_ANCHORS_H_
