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

#include "nephroscope/anchors.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>

#include <boost/math/special_functions/beta.hpp>

#include "nephroscope/parallel.h"
#include "nephroscope/random.h"
#include "nephroscope/status.h"

namespace nephroscope {
namespace {

constexpr char kModule[] = "anchors";

double Quantile(const std::vector<double>& sorted, double q) {
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

uint64_t FeatureSetSeed(uint64_t seed, std::span<const size_t> features) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t f : features) {
    h ^= static_cast<uint64_t>(f) + 1;
    h *= 0x100000001b3ULL;
  }
  h ^= features.size();
  return MixSeed(seed, h);
}

std::vector<size_t> AnchoredFeatures(std::span<const Predicate> predicates) {
  std::vector<size_t> features;
  for (const auto& p : predicates) features.push_back(p.feature);
  std::sort(features.begin(), features.end());
  features.erase(std::unique(features.begin(), features.end()), features.end());
  return features;
}

Label Thresholded(double probability, double threshold) {
  return probability >= threshold ? Label::kCkd : Label::kNoCkd;
}

void CheckOptions(const AnchorOptions& options) {
  if (!(options.tau > 0.5 && options.tau <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "tau must be in (0.5, 1]");
  }
  if (options.n_samples < 1) throw Error(ErrorCode::kInvalidArgument, kModule, "n_samples must be >= 1");
  if (options.beam < 1) throw Error(ErrorCode::kInvalidArgument, kModule, "beam must be >= 1");
  if (!(options.confidence > 0.0 && options.confidence < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "confidence must be in (0, 1)");
  }
}

// Counts matching samples for one anchored feature set.
PrecisionEstimate EstimateForFeatures(std::span<const size_t> anchored, const Model& model,
                                      std::span<const double> instance,
                                      const PerturbationSpace& space,
                                      const AnchorOptions& options, Label target) {
  PrecisionEstimate estimate;
  if (anchored.size() == instance.size()) {
    // No free feature: the space is the instance itself.
    const bool match = Thresholded(model.Predict(instance), options.threshold) == target;
    estimate.samples = 1;
    estimate.matches = match ? 1 : 0;
    estimate.precision = match ? 1.0 : 0.0;
    estimate.lower = estimate.precision;
    return estimate;
  }
  const auto samples = SamplePerturbations(instance, anchored, space, options.n_samples);
  for (const auto& row : samples) {
    if (Thresholded(model.Predict(row), options.threshold) == target) ++estimate.matches;
  }
  estimate.samples = samples.size();
  estimate.precision =
      static_cast<double>(estimate.matches) / static_cast<double>(estimate.samples);
  estimate.lower = ClopperPearsonLower(estimate.matches, estimate.samples, options.confidence);
  return estimate;
}

std::string FormatNumber(double value, const char* format) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), format, value);
  return buffer;
}

}  // namespace

bool Predicate::Holds(std::span<const double> row) const {
  const double v = row[feature];
  switch (op) {
    case PredicateOp::kLessEqual:
      return v <= value;
    case PredicateOp::kGreater:
      return v > value;
    case PredicateOp::kEqual:
      return v == value;
  }
  return false;
}

PerturbationSpace::PerturbationSpace(const Dataset& reference, uint64_t seed)
    : reference_(reference), seed_(seed) {
  if (reference_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "perturbation space needs a non-empty dataset");
  }
  const size_t d = reference_.schema.size();
  columns_.resize(d);
  deciles_.resize(d);
  for (size_t f = 0; f < d; ++f) {
    for (const auto& record : reference_.records) {
      if (record.values.size() != d) {
        throw Error(ErrorCode::kSchemaMismatch, kModule, "reference record width mismatch");
      }
      if (!IsMissing(record.values[f])) columns_[f].push_back(record.values[f]);
    }
    if (columns_[f].empty()) {
      throw Error(ErrorCode::kDataError, kModule,
                  "feature '" + reference_.schema.spec(f).name + "' has no observed values");
    }
    if (reference_.schema.spec(f).is_binary()) continue;
    std::vector<double> sorted = columns_[f];
    std::sort(sorted.begin(), sorted.end());
    for (int k = 1; k <= 9; ++k) deciles_[f].push_back(Quantile(sorted, k / 10.0));
    deciles_[f].erase(std::unique(deciles_[f].begin(), deciles_[f].end()), deciles_[f].end());
  }
}

std::vector<Predicate> CandidatePredicates(std::span<const double> instance,
                                           const PerturbationSpace& space) {
  const auto& schema = space.schema();
  if (instance.size() != schema.size()) {
    throw Error(ErrorCode::kSchemaMismatch, kModule, "instance width does not match the space");
  }
  std::vector<Predicate> out;
  for (size_t f = 0; f < schema.size(); ++f) {
    const double x = instance[f];
    if (schema.spec(f).is_binary()) {
      out.push_back({f, PredicateOp::kEqual, x});
      continue;
    }
    std::vector<double> cuts = space.deciles(f);
    cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (double c : cuts) {
      out.push_back({f, x <= c ? PredicateOp::kLessEqual : PredicateOp::kGreater, c});
    }
  }
  return out;
}

std::vector<std::vector<double>> SamplePerturbations(std::span<const double> instance,
                                                     std::span<const size_t> anchored,
                                                     const PerturbationSpace& space,
                                                     size_t n_samples) {
  const size_t d = space.schema().size();
  if (instance.size() != d) {
    throw Error(ErrorCode::kSchemaMismatch, kModule, "instance width does not match the space");
  }
  std::vector<size_t> sorted(anchored.begin(), anchored.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<bool> fixed(d, false);
  for (size_t f : sorted) {
    if (f >= d) throw Error(ErrorCode::kInvalidArgument, kModule, "anchored feature out of range");
    fixed[f] = true;
  }
  Rng rng(FeatureSetSeed(space.seed(), sorted));
  std::vector<std::vector<double>> samples(n_samples, std::vector<double>(d));
  for (auto& row : samples) {
    for (size_t f = 0; f < d; ++f) {
      if (fixed[f]) {
        row[f] = instance[f];
      } else {
        const auto& column = space.column(f);
        row[f] = column[rng.UniformInt(column.size())];
      }
    }
  }
  return samples;
}

PrecisionEstimate EstimatePrecision(std::span<const Predicate> predicates, const Model& model,
                                    std::span<const double> instance,
                                    const PerturbationSpace& space,
                                    const AnchorOptions& options) {
  if (options.n_samples < 1) throw Error(ErrorCode::kInvalidArgument, kModule, "n_samples must be >= 1");
  if (instance.size() != model.feature_count()) {
    throw Error(ErrorCode::kSchemaMismatch, kModule, "instance width does not match the model");
  }
  const Label target = Thresholded(model.Predict(instance), options.threshold);
  const auto anchored = AnchoredFeatures(predicates);
  return EstimateForFeatures(anchored, model, instance, space, options, target);
}

double RuleCoverage(std::span<const Predicate> predicates, const Dataset& dataset) {
  if (dataset.empty()) return 0.0;
  size_t covered = 0;
  for (const auto& record : dataset.records) {
    bool all = true;
    for (const auto& p : predicates) {
      if (!p.Holds(record.values)) {
        all = false;
        break;
      }
    }
    if (all) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(dataset.size());
}

AnchorRule InduceAnchor(const Model& model, std::span<const double> instance,
                        const PerturbationSpace& space, const AnchorOptions& options) {
  CheckOptions(options);
  if (instance.size() != model.feature_count() || instance.size() != space.schema().size()) {
    throw Error(ErrorCode::kSchemaMismatch, kModule, "instance width does not match the model");
  }
  for (double v : instance) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, kModule, "instance has a missing value");
  }
  const Label target = Thresholded(model.Predict(instance), options.threshold);
  const auto candidates = CandidatePredicates(instance, space);

  std::map<std::vector<size_t>, PrecisionEstimate> cache;
  auto evaluate = [&](std::vector<std::vector<Predicate>>& rules) {
    std::vector<std::vector<size_t>> missing;
    for (const auto& rule : rules) {
      auto features = AnchoredFeatures(rule);
      if (!cache.count(features)) {
        cache.emplace(features, PrecisionEstimate{});
        missing.push_back(std::move(features));
      }
    }
    std::vector<PrecisionEstimate> results(missing.size());
    ParallelFor(missing.size(), [&](size_t i) {
      results[i] = EstimateForFeatures(missing[i], model, instance, space, options, target);
    });
    for (size_t i = 0; i < missing.size(); ++i) cache[missing[i]] = results[i];
    std::vector<AnchorRule> out;
    for (auto& rule : rules) {
      AnchorRule r;
      const auto& estimate = cache.at(AnchoredFeatures(rule));
      r.predicates = rule;
      r.predicted_class = target;
      r.precision = estimate.precision;
      r.precision_lower = estimate.lower;
      r.samples_used = estimate.samples;
      r.coverage = RuleCoverage(rule, space.reference());
      out.push_back(std::move(r));
    }
    return out;
  };
  auto better = [](const AnchorRule& a, const AnchorRule& b) {
    if (a.precision_lower != b.precision_lower) return a.precision_lower > b.precision_lower;
    if (a.coverage != b.coverage) return a.coverage > b.coverage;
    return a.precision > b.precision;
  };

  std::vector<std::vector<Predicate>> start = {{}};
  std::vector<AnchorRule> beam = evaluate(start);
  if (beam[0].precision_lower >= options.tau) return beam[0];
  AnchorRule best = beam[0];

  for (size_t length = 1; length <= options.max_predicates; ++length) {
    std::vector<std::vector<Predicate>> expansions;
    std::vector<std::vector<Predicate>> seen;
    for (const auto& parent : beam) {
      for (const auto& candidate : candidates) {
        bool used = false;
        for (const auto& p : parent.predicates) used |= p.feature == candidate.feature;
        if (used) continue;
        auto rule = parent.predicates;
        rule.push_back(candidate);
        std::sort(rule.begin(), rule.end(), [](const Predicate& a, const Predicate& b) {
          if (a.feature != b.feature) return a.feature < b.feature;
          if (a.op != b.op) return a.op < b.op;
          return a.value < b.value;
        });
        if (std::find(seen.begin(), seen.end(), rule) != seen.end()) continue;
        seen.push_back(rule);
        expansions.push_back(std::move(rule));
      }
    }
    if (expansions.empty()) break;
    std::vector<AnchorRule> scored = evaluate(expansions);

    const AnchorRule* stopper = nullptr;
    for (const auto& rule : scored) {
      if (rule.precision_lower < options.tau) continue;
      if (stopper == nullptr || rule.coverage > stopper->coverage ||
          (rule.coverage == stopper->coverage && rule.precision > stopper->precision)) {
        stopper = &rule;
      }
    }
    if (stopper != nullptr) return *stopper;

    std::stable_sort(scored.begin(), scored.end(), better);
    if (better(scored.front(), best)) best = scored.front();
    scored.resize(std::min(scored.size(), options.beam));
    beam = std::move(scored);
  }
  best.below_target = true;
  return best;
}

double ClopperPearsonLower(size_t successes, size_t trials, double confidence) {
  if (trials == 0 || successes > trials) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "invalid binomial counts");
  }
  if (successes == 0) return 0.0;
  const double alpha = 1.0 - confidence;
  return boost::math::ibeta_inv(static_cast<double>(successes),
                                static_cast<double>(trials - successes + 1), alpha);
}

std::pair<double, double> ClopperPearsonInterval(size_t successes, size_t trials,
                                                 double confidence) {
  if (trials == 0 || successes > trials) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "invalid binomial counts");
  }
  const double alpha = 1.0 - confidence;
  const double k = static_cast<double>(successes);
  const double n = static_cast<double>(trials);
  const double lower = successes == 0 ? 0.0 : boost::math::ibeta_inv(k, n - k + 1.0, alpha / 2);
  const double upper =
      successes == trials ? 1.0 : boost::math::ibeta_inv(k + 1.0, n - k, 1.0 - alpha / 2);
  return {lower, upper};
}

std::string FormatRule(const AnchorRule& rule, const FeatureSchema& schema,
                       const ScalerParams* scaler) {
  std::string out = "IF ";
  if (rule.predicates.empty()) out += "TRUE";
  for (size_t i = 0; i < rule.predicates.size(); ++i) {
    const auto& p = rule.predicates[i];
    if (i > 0) out += " AND ";
    const auto& spec = schema.spec(p.feature);
    out += spec.name;
    if (p.op == PredicateOp::kEqual) {
      const bool gender = EqualsIgnoreCase(spec.name, "gender");
      const bool one = p.value == 1.0;
      out += " = ";
      out += gender ? (one ? "man" : "woman") : (one ? "yes" : "no");
      continue;
    }
    out += p.op == PredicateOp::kLessEqual ? " <= " : " > ";
    const double raw = scaler ? scaler->Unscale(p.feature, p.value) : p.value;
    out += FormatNumber(raw, "%.2f");
  }
  out += " THEN ";
  out += LabelName(rule.predicted_class);
  out += " [precision=" + FormatNumber(rule.precision, "%.4f") +
         ", coverage=" + FormatNumber(rule.coverage, "%.4f") +
         ", n=" + std::to_string(rule.samples_used) + "]";
  return out;
}

}  // namespace nephroscope
