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

#include "nephroscope/local_explain.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nephroscope/parallel.h"
#include "nephroscope/random.h"
#include "nephroscope/status.h"

namespace nephroscope {
namespace {

constexpr char kModule[] = "local_explain";

double Median(std::vector<double> values) {
  const size_t n = values.size();
  std::sort(values.begin(), values.end());
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Label Thresholded(double probability, double threshold) {
  return probability >= threshold ? Label::kCkd : Label::kNoCkd;
}

void CheckRow(std::span<const double> row, size_t width, std::string_view what) {
  if (row.size() != width) {
    throw Error(ErrorCode::kSchemaMismatch, kModule,
                std::string(what) + " has " + std::to_string(row.size()) +
                    " values, expected " + std::to_string(width));
  }
}

}  // namespace

std::string_view NumericScaleName(NumericScale scale) {
  return scale == NumericScale::kMad ? "mad" : "std";
}

std::string_view DistanceNormName(DistanceNorm norm) {
  return norm == DistanceNorm::kL1 ? "l1" : "l2";
}

DistanceStats DistanceStats::Fit(const Dataset& reference, const DistanceConfig& config) {
  if (reference.empty()) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "distance statistics need a non-empty dataset");
  }
  if (!(config.categorical_mismatch_cost >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "categorical_mismatch_cost must be >= 0");
  }
  const size_t d = reference.schema.size();
  DistanceStats stats;
  stats.scale.assign(d, 1.0);
  stats.numeric.assign(d, false);
  for (size_t f = 0; f < d; ++f) {
    if (reference.schema.spec(f).is_binary()) continue;
    stats.numeric[f] = true;
    std::vector<double> column;
    column.reserve(reference.size());
    for (const auto& record : reference.records) {
      if (!IsMissing(record.values[f])) column.push_back(record.values[f]);
    }
    double spread = 0.0;
    if (!column.empty()) {
      if (config.numeric_scale == NumericScale::kMad) {
        const double median = Median(column);
        std::vector<double> deviations;
        deviations.reserve(column.size());
        for (double v : column) deviations.push_back(std::abs(v - median));
        spread = Median(std::move(deviations));
      } else {
        const double mean =
            std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(column.size());
        double ss = 0.0;
        for (double v : column) ss += (v - mean) * (v - mean);
        spread = std::sqrt(ss / static_cast<double>(column.size()));
      }
    }
    if (spread > 0.0 && std::isfinite(spread)) {
      stats.scale[f] = spread;
    } else {
      stats.fallback_features.push_back(f);
    }
  }
  return stats;
}

double Distance(std::span<const double> a, std::span<const double> b,
                const DistanceConfig& config, const DistanceStats& stats) {
  if (a.size() != b.size() || a.size() != stats.scale.size()) {
    throw Error(ErrorCode::kSchemaMismatch, kModule, "distance operands differ in width");
  }
  double numeric = 0.0;
  size_t mismatches = 0;
  for (size_t f = 0; f < a.size(); ++f) {
    if (stats.numeric[f]) {
      const double z = std::abs(a[f] - b[f]) / stats.scale[f];
      numeric += config.norm == DistanceNorm::kL1 ? z : z * z;
    } else if (a[f] != b[f]) {
      ++mismatches;
    }
  }
  const double cost = config.categorical_mismatch_cost;
  if (config.norm == DistanceNorm::kL1) {
    return numeric + cost * static_cast<double>(mismatches);
  }
  return std::sqrt(numeric + cost * cost * static_cast<double>(mismatches));
}

double DefaultEpsilon(const Dataset& dataset, const DistanceConfig& config,
                      const DistanceStats& stats, double quantile, size_t sample,
                      uint64_t seed) {
  if (dataset.size() < 2) return 1.0;
  if (!(quantile > 0.0 && quantile < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "epsilon quantile must be in (0, 1)");
  }
  std::vector<size_t> indices(dataset.size());
  std::iota(indices.begin(), indices.end(), 0);
  if (sample >= 2 && dataset.size() > sample) {
    Rng rng(MixSeed(seed, 0xe95));
    rng.Shuffle(std::span<size_t>(indices));
    indices.resize(sample);
    std::sort(indices.begin(), indices.end());
  }
  std::vector<double> distances;
  for (size_t i = 0; i < indices.size(); ++i) {
    for (size_t j = i + 1; j < indices.size(); ++j) {
      distances.push_back(Distance(dataset.records[indices[i]].values,
                                   dataset.records[indices[j]].values, config, stats));
    }
  }
  std::sort(distances.begin(), distances.end());
  // Lower empirical quantile.
  const auto k = static_cast<size_t>(std::floor(quantile * static_cast<double>(distances.size() - 1)));
  const double epsilon = distances[k];
  // All sampled records identical: any positive radius covers them.
  return epsilon > 0.0 ? epsilon : 1.0;
}

PrototypeSet SelectPrototypes(const Dataset& dataset, const Model& model, double threshold,
                              const PrototypeOptions& options) {
  if (dataset.empty()) throw Error(ErrorCode::kInvalidArgument, kModule, "dataset is empty");
  if (options.m < 1) throw Error(ErrorCode::kInvalidArgument, kModule, "m must be >= 1");
  const size_t n = dataset.size();
  const DistanceStats stats = DistanceStats::Fit(dataset, options.distance);
  const double epsilon =
      options.epsilon ? *options.epsilon
                      : DefaultEpsilon(dataset, options.distance, stats, options.epsilon_quantile,
                                       options.epsilon_sample, options.seed);
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, kModule, "epsilon must be > 0");

  std::vector<double> probability(n);
  std::vector<Label> predicted(n);
  std::vector<Label> cls(n);
  for (size_t i = 0; i < n; ++i) {
    probability[i] = PredictProba(model, dataset.records[i]);
    predicted[i] = Thresholded(probability[i], threshold);
    cls[i] = dataset.records[i].label.value_or(predicted[i]);
  }

  // Neighbourhoods within epsilon, row by row.
  std::vector<std::vector<size_t>> ball(n);
  ParallelFor(n, [&](size_t i) {
    for (size_t j = 0; j < n; ++j) {
      if (Distance(dataset.records[i].values, dataset.records[j].values, options.distance,
                   stats) <= epsilon) {
        ball[i].push_back(j);
      }
    }
  });

  PrototypeSet result;
  result.epsilon = epsilon;
  std::vector<bool> covered(n, false);
  std::vector<bool> chosen(n, false);
  while (result.members.size() < options.m) {
    double best_gain = 0.0;
    size_t best = n;
    for (size_t i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      double same = 0.0;
      double other = 0.0;
      for (size_t j : ball[i]) {
        if (cls[j] == cls[i]) {
          if (!covered[j]) same += 1.0;
        } else {
          other += 1.0;
        }
      }
      const double gain = same - options.other_class_penalty * other;
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    if (best == n) break;
    Prototype p;
    p.index = best;
    p.id = dataset.records[best].id;
    p.coverage_class = cls[best];
    p.predicted_class = predicted[best];
    p.probability = probability[best];
    for (size_t j : ball[best]) {
      if (cls[j] == cls[best] && !covered[j]) {
        covered[j] = true;
        p.covered.push_back(j);
      }
    }
    p.covered_count = p.covered.size();
    chosen[best] = true;
    result.members.push_back(std::move(p));
    result.objective_trace.push_back(best_gain);
  }
  return result;
}

std::optional<CounterfactualPair> FindCounterfactual(std::span<const double> reference,
                                                     const Dataset& pool, const Model& model,
                                                     double threshold,
                                                     const DistanceConfig& config,
                                                     const DistanceStats& stats) {
  if (pool.empty()) throw Error(ErrorCode::kInvalidArgument, kModule, "counterfactual pool is empty");
  CheckRow(reference, pool.schema.size(), "reference record");
  PatientRecord reference_record;
  reference_record.values.assign(reference.begin(), reference.end());
  const double reference_probability = PredictProba(model, reference_record);
  const Label reference_prediction = Thresholded(reference_probability, threshold);

  size_t best = pool.size();
  double best_distance = 0.0;
  double best_probability = 0.0;
  for (size_t i = 0; i < pool.size(); ++i) {
    const double p = PredictProba(model, pool.records[i]);
    if (Thresholded(p, threshold) == reference_prediction) continue;
    const double d = Distance(reference, pool.records[i].values, config, stats);
    if (best == pool.size() || d < best_distance) {
      best = i;
      best_distance = d;
      best_probability = p;
    }
  }
  if (best == pool.size()) return std::nullopt;

  CounterfactualPair pair;
  pair.reference = reference_record.values;
  pair.counterfactual = pool.records[best];
  pair.pool_index = best;
  pair.distance = best_distance;
  pair.reference_prediction = reference_prediction;
  pair.counterfactual_prediction = Thresholded(best_probability, threshold);
  pair.reference_probability = reference_probability;
  pair.counterfactual_probability = best_probability;
  for (size_t f = 0; f < reference.size(); ++f) {
    const double a = reference[f];
    const double b = pair.counterfactual.values[f];
    if (a == b) continue;
    FeatureChange change;
    change.feature = f;
    change.name = pool.schema.spec(f).name;
    change.reference_value = pool.scaler ? pool.scaler->Unscale(f, a) : a;
    change.counterfactual_value = pool.scaler ? pool.scaler->Unscale(f, b) : b;
    pair.changed_features.push_back(std::move(change));
  }
  return pair;
}

std::optional<CounterfactualPair> FindCounterfactual(std::span<const double> reference,
                                                     const Dataset& pool, const Model& model,
                                                     double threshold,
                                                     const DistanceConfig& config) {
  if (pool.empty()) throw Error(ErrorCode::kInvalidArgument, kModule, "counterfactual pool is empty");
  return FindCounterfactual(reference, pool, model, threshold, config,
                            DistanceStats::Fit(pool, config));
}

}  // namespace nephroscope
