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

#include "nephroscope/shap.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "nephroscope/parallel.h"
#include "nephroscope/random.h"
#include "nephroscope/status.h"

namespace nephroscope {
namespace {

constexpr char kModule[] = "shap_engine";
constexpr size_t kMaxPathFeatures = 160;

// kWeight[p][q] = p! q! / (p + q + 1)!, built lazily by recurrence so that no
// factorial overflows.
double PathWeight(size_t p, size_t q) {
  static const std::vector<std::vector<double>> table = [] {
    std::vector<std::vector<double>> t(kMaxPathFeatures + 1,
                                       std::vector<double>(kMaxPathFeatures + 1));
    for (size_t p = 0; p <= kMaxPathFeatures; ++p) {
      for (size_t q = 0; q <= kMaxPathFeatures; ++q) {
        if (p == 0 && q == 0) {
          t[p][q] = 1.0;
        } else if (p > 0) {
          // p!q!/(p+q+1)! = (p/(p+q+1)) * (p-1)!q!/(p+q)!
          t[p][q] = t[p - 1][q] * static_cast<double>(p) / static_cast<double>(p + q + 1);
        } else {
          t[p][q] = t[p][q - 1] * static_cast<double>(q) / static_cast<double>(p + q + 1);
        }
      }
    }
    return t;
  }();
  if (p > kMaxPathFeatures || q > kMaxPathFeatures) {
    throw Error(ErrorCode::kInternal, kModule, "tree path too long for attribution");
  }
  return table[p][q];
}

enum Side : uint8_t { kUnseen = 0, kInstanceSide = 1, kReferenceSide = 2 };

class TreeWalker {
 public:
  TreeWalker(const DecisionTree& tree, std::span<const double> x, std::span<const double> r,
             double scale, std::span<double> phis)
      : tree_(tree), x_(x), r_(r), scale_(scale), phis_(phis), side_(x.size(), kUnseen) {}

  void Run() { Visit(0); }

 private:
  void Visit(size_t index) {
    const TreeNode& node = tree_.nodes[index];
    if (node.is_leaf()) {
      Leaf(node.value);
      return;
    }
    const auto f = static_cast<size_t>(node.feature);
    const size_t x_child = static_cast<size_t>(x_[f] <= node.threshold ? node.left : node.right);
    const size_t r_child = static_cast<size_t>(r_[f] <= node.threshold ? node.left : node.right);
    if (side_[f] == kInstanceSide) return Visit(x_child);
    if (side_[f] == kReferenceSide) return Visit(r_child);
    if (x_child == r_child) return Visit(x_child);

    side_[f] = kInstanceSide;
    instance_features_.push_back(f);
    Visit(x_child);
    instance_features_.pop_back();

    side_[f] = kReferenceSide;
    reference_features_.push_back(f);
    Visit(r_child);
    reference_features_.pop_back();
    side_[f] = kUnseen;
  }

  // The leaf contributes v to v(S) iff S holds every instance-side feature
  // and no reference-side feature.
  void Leaf(double value) {
    const size_t a = instance_features_.size();
    const size_t c = reference_features_.size();
    if (a + c == 0 || value == 0.0) return;
    const double v = value * scale_;
    if (a > 0) {
      const double w = v * PathWeight(a - 1, c);
      for (size_t f : instance_features_) phis_[f] += w;
    }
    if (c > 0) {
      const double w = v * PathWeight(a, c - 1);
      for (size_t f : reference_features_) phis_[f] -= w;
    }
  }

  const DecisionTree& tree_;
  std::span<const double> x_;
  std::span<const double> r_;
  double scale_;
  std::span<double> phis_;
  std::vector<uint8_t> side_;
  std::vector<size_t> instance_features_;
  std::vector<size_t> reference_features_;
};

std::vector<std::vector<double>> BackgroundRows(const Dataset& background, size_t width) {
  if (background.empty()) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "background dataset is empty");
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(background.size());
  for (size_t i = 0; i < background.size(); ++i) {
    const auto& values = background.records[i].values;
    if (values.size() != width) {
      throw Error(ErrorCode::kSchemaMismatch, kModule,
                  "background row " + std::to_string(i) + " has " +
                      std::to_string(values.size()) + " values, expected " +
                      std::to_string(width));
    }
    for (double v : values) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kInvalidArgument, kModule,
                    "background row " + std::to_string(i) + " has a missing value");
      }
    }
    rows.push_back(values);
  }
  return rows;
}

void CheckInstance(std::span<const double> instance, size_t width) {
  if (instance.size() != width) {
    throw Error(ErrorCode::kSchemaMismatch, kModule,
                "instance has " + std::to_string(instance.size()) + " values, expected " +
                    std::to_string(width));
  }
  for (double v : instance) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, kModule, "instance has a missing value");
    }
  }
}

Attribution TreeAttribution(const ForestModel& forest, std::span<const double> instance,
                            std::span<const std::vector<double>> background) {
  Attribution out;
  out.phis.assign(instance.size(), 0.0);
  const double scale =
      1.0 / (static_cast<double>(forest.trees.size()) * static_cast<double>(background.size()));
  double base = 0.0;
  for (const auto& row : background) {
    base += forest.Predict(row);
    for (const auto& tree : forest.trees) {
      TreeAttributionAgainst(tree, instance, row, scale, out.phis);
    }
  }
  out.base_value = base / static_cast<double>(background.size());
  return out;
}

// Every background row gets the same number of antithetic permutation
// pairs, so the per-row telescoping sums make additivity exact.
Attribution PermutationAttribution(const PredictFn& f, std::span<const double> instance,
                                   std::span<const std::vector<double>> background,
                                   const AttributionOptions& options) {
  const size_t n = instance.size();
  const size_t rows = background.size();
  const size_t pairs = std::max<size_t>(1, (options.permutations + 2 * rows - 1) / (2 * rows));
  const double scale = 1.0 / (static_cast<double>(rows) * static_cast<double>(2 * pairs));
  Attribution out;
  out.phis.assign(n, 0.0);
  out.exact = false;
  std::vector<size_t> order(n);
  std::vector<double> hybrid(n);
  double base = 0.0;
  for (size_t b = 0; b < rows; ++b) {
    Rng rng(MixSeed(options.seed, b));
    const double reference_value = f(background[b]);
    base += reference_value;
    for (size_t p = 0; p < pairs; ++p) {
      std::iota(order.begin(), order.end(), 0);
      rng.Shuffle(std::span<size_t>(order));
      for (int direction = 0; direction < 2; ++direction) {
        hybrid = background[b];
        double previous = reference_value;
        for (size_t k = 0; k < n; ++k) {
          const size_t j = direction == 0 ? order[k] : order[n - 1 - k];
          if (hybrid[j] == instance[j]) continue;
          hybrid[j] = instance[j];
          const double current = f(hybrid);
          out.phis[j] += (current - previous) * scale;
          previous = current;
        }
      }
    }
  }
  out.base_value = base / static_cast<double>(rows);
  return out;
}

}  // namespace

void TreeAttributionAgainst(const DecisionTree& tree, std::span<const double> instance,
                            std::span<const double> reference, double scale,
                            std::span<double> phis) {
  TreeWalker(tree, instance, reference, scale, phis).Run();
}

Attribution AttributeOracle(const PredictFn& f, std::span<const double> instance,
                            std::span<const std::vector<double>> background) {
  const size_t n = instance.size();
  if (n > kMaxOracleFeatures) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "subset enumeration is limited to " + std::to_string(kMaxOracleFeatures) +
                    " features, got " + std::to_string(n));
  }
  if (background.empty()) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "background dataset is empty");
  }
  const size_t subsets = size_t{1} << n;
  std::vector<double> value(subsets, 0.0);
  std::vector<double> hybrid(n);
  for (size_t mask = 0; mask < subsets; ++mask) {
    double sum = 0.0;
    for (const auto& row : background) {
      for (size_t j = 0; j < n; ++j) hybrid[j] = (mask >> j) & 1 ? instance[j] : row[j];
      sum += f(hybrid);
    }
    value[mask] = sum / static_cast<double>(background.size());
  }
  // weight[s] = s!(n-s-1)!/n!
  std::vector<double> weight(n, 0.0);
  for (size_t s = 0; s < n; ++s) {
    double w = 1.0 / static_cast<double>(n);
    // 1/(n * C(n-1, s))
    for (size_t k = 1; k <= s; ++k) {
      w *= static_cast<double>(k) / static_cast<double>(n - k);
    }
    weight[s] = w;
  }
  Attribution out;
  out.phis.assign(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const size_t bit = size_t{1} << i;
    for (size_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      const auto s = static_cast<size_t>(std::popcount(mask));
      out.phis[i] += weight[s] * (value[mask | bit] - value[mask]);
    }
  }
  out.base_value = value[0];
  out.prediction = f(instance);
  out.instance.assign(instance.begin(), instance.end());
  out.background_size = background.size();
  return out;
}

Attribution AttributeOracle(const Model& model, std::span<const double> instance,
                            const Dataset& background) {
  CheckInstance(instance, model.feature_count());
  const auto rows = BackgroundRows(background, model.feature_count());
  return AttributeOracle([&](std::span<const double> row) { return model.Predict(row); },
                         instance, rows);
}

Attribution Attribute(const Model& model, std::span<const double> instance,
                      const Dataset& background, const AttributionOptions& options) {
  const size_t n = model.feature_count();
  CheckInstance(instance, n);
  if (background.schema.size() != n) {
    throw Error(ErrorCode::kSchemaMismatch, kModule, "background schema does not match model");
  }
  const auto rows = BackgroundRows(background, n);
  Attribution out;
  if (const auto* forest = model.forest()) {
    out = TreeAttribution(*forest, instance, rows);
  } else {
    const PredictFn f = [&](std::span<const double> row) { return model.Predict(row); };
    if (n <= kMaxOracleFeatures) {
      out = AttributeOracle(f, instance, rows);
    } else {
      out = PermutationAttribution(f, instance, rows, options);
    }
  }
  out.prediction = model.Predict(instance);
  out.instance.assign(instance.begin(), instance.end());
  out.background_size = rows.size();
  return out;
}

Dataset SubsampleBackground(const Dataset& train, size_t max_rows, uint64_t seed) {
  if (max_rows == 0) throw Error(ErrorCode::kInvalidArgument, kModule, "max_rows must be >= 1");
  if (train.size() <= max_rows) return train;
  std::vector<size_t> indices(train.size());
  std::iota(indices.begin(), indices.end(), 0);
  Rng rng(MixSeed(seed, 0xbac6));
  rng.Shuffle(std::span<size_t>(indices));
  indices.resize(max_rows);
  std::sort(indices.begin(), indices.end());
  return Subset(train, indices);
}

GlobalSummary ComputeGlobalSummary(const Model& model, const Dataset& explain_set,
                                   const Dataset& background,
                                   const AttributionOptions& options) {
  if (explain_set.empty()) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "explain set is empty");
  }
  const size_t n = model.feature_count();
  if (explain_set.schema.size() != n) {
    throw Error(ErrorCode::kSchemaMismatch, kModule, "explain set schema does not match model");
  }
  GlobalSummary summary;
  summary.attributions.resize(explain_set.size());
  ParallelFor(explain_set.size(), [&](size_t i) {
    summary.attributions[i] =
        Attribute(model, explain_set.records[i].values, background, options);
  });
  summary.features.resize(n);
  for (size_t f = 0; f < n; ++f) summary.features[f].feature = explain_set.schema.spec(f).name;
  for (size_t i = 0; i < explain_set.size(); ++i) {
    const auto& record = explain_set.records[i];
    summary.record_ids.push_back(record.id);
    for (size_t f = 0; f < n; ++f) {
      const double phi = summary.attributions[i].phis[f];
      const double raw =
          explain_set.scaler ? explain_set.scaler->Unscale(f, record.values[f]) : record.values[f];
      summary.features[f].mean_abs_phi += std::abs(phi);
      summary.features[f].points.emplace_back(phi, raw);
    }
  }
  for (auto& feature : summary.features) {
    feature.mean_abs_phi /= static_cast<double>(explain_set.size());
  }
  summary.ranking.resize(n);
  std::iota(summary.ranking.begin(), summary.ranking.end(), 0);
  std::stable_sort(summary.ranking.begin(), summary.ranking.end(), [&](size_t a, size_t b) {
    return summary.features[a].mean_abs_phi > summary.features[b].mean_abs_phi;
  });
  for (size_t r = 0; r < n; ++r) summary.features[summary.ranking[r]].rank = r + 1;
  return summary;
}

double RankCorrelation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "rank correlation inputs differ in length");
  }
  auto ranks = [](std::span<const double> v) {
    std::vector<size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (size_t i = 0; i < v.size();) {
      size_t j = i;
      while (j < v.size() && v[order[j]] == v[order[i]]) ++j;
      const double mid = 0.5 * static_cast<double>(i + j + 1);
      for (size_t k = i; k < j; ++k) r[order[k]] = mid;
      i = j;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

}  // namespace nephroscope
