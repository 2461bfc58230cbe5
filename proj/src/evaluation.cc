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

#include "nephroscope/evaluation.h"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <numeric>
#include <tuple>

#include "csv.h"
#include "nephroscope/status.h"

namespace nephroscope {
namespace {

constexpr char kModule[] = "evaluation";

void CheckInputs(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "scores and labels differ in length (" + std::to_string(scores.size()) +
                    " vs " + std::to_string(labels.size()) + ")");
  }
  if (scores.empty()) throw Error(ErrorCode::kInvalidArgument, kModule, "empty input");
}

}  // namespace

double ConfusionCounts::sensitivity() const {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double ConfusionCounts::specificity() const {
  return tn + fp == 0 ? 0.0 : static_cast<double>(tn) / static_cast<double>(tn + fp);
}

ConfusionCounts Confusion(std::span<const double> scores, std::span<const Label> labels,
                          double threshold) {
  CheckInputs(scores, labels);
  ConfusionCounts counts;
  for (size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == Label::kCkd) {
      ++(predicted ? counts.tp : counts.fn);
    } else {
      ++(predicted ? counts.fp : counts.tn);
    }
  }
  return counts;
}

double RocAuc(std::span<const double> scores, std::span<const Label> labels) {
  CheckInputs(scores, labels);
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  int64_t positives = 0;
  int64_t doubled_rank_sum = 0;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1..j share the mid-rank (i+1+j)/2; keep it doubled.
    const auto doubled_mid_rank = static_cast<int64_t>(i + 1 + j);
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]] == Label::kCkd) {
        ++positives;
        doubled_rank_sum += doubled_mid_rank;
      }
    }
    i = j;
  }
  const int64_t negatives = static_cast<int64_t>(n) - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "ROC-AUC needs both classes present");
  }
  const int64_t doubled_u = doubled_rank_sum - positives * (positives + 1);
  return static_cast<double>(doubled_u) /
         static_cast<double>(2 * positives * negatives);
}

EvalMetrics Evaluate(std::span<const double> scores, std::span<const Label> labels,
                     double threshold) {
  EvalMetrics metrics;
  metrics.threshold = threshold;
  metrics.counts = Confusion(scores, labels, threshold);
  metrics.sensitivity = metrics.counts.sensitivity();
  metrics.specificity = metrics.counts.specificity();
  metrics.rocauc = RocAuc(scores, labels);
  return metrics;
}

ThresholdPolicy ThresholdPolicy::Parse(const std::string& text) {
  const size_t colon = text.find(':');
  auto fail = [&]() -> ThresholdPolicy {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "threshold policy must be 'floor:<specificity>' or 'fixed:<threshold>', got '" +
                    text + "'");
  };
  if (colon == std::string::npos) return fail();
  const std::string kind = text.substr(0, colon);
  const std::string number = text.substr(colon + 1);
  double value = 0.0;
  auto result = std::from_chars(number.data(), number.data() + number.size(), value);
  if (result.ec != std::errc() || result.ptr != number.data() + number.size()) {
    return fail();
  }
  if (kind == "floor") return Floor(value);
  if (kind == "fixed") return Fixed(value);
  return fail();
}

std::string ThresholdPolicy::ToString() const {
  return (kind == Kind::kFixed ? "fixed:" : "floor:") + internal::FormatDouble(value);
}

std::vector<double> CandidateThresholds(std::span<const double> scores) {
  std::vector<double> distinct(scores.begin(), scores.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> candidates = {0.0, 1.0};
  for (size_t i = 0; i + 1 < distinct.size(); ++i) {
    candidates.push_back(distinct[i] + 0.5 * (distinct[i + 1] - distinct[i]));
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  return candidates;
}

ThresholdChoice ChooseThreshold(std::span<const double> scores,
                                std::span<const Label> labels,
                                const ThresholdPolicy& policy) {
  if (policy.kind == ThresholdPolicy::Kind::kFixed) return {policy.value, false};
  CheckInputs(scores, labels);

  struct Point {
    double threshold;
    double sensitivity;
    double specificity;
  };
  std::vector<Point> points;
  for (double t : CandidateThresholds(scores)) {
    const ConfusionCounts c = Confusion(scores, labels, t);
    points.push_back({t, c.sensitivity(), c.specificity()});
  }

  // Candidates ascend, so ">=" keeps the largest threshold among ties.
  const Point* best = nullptr;
  for (const auto& p : points) {
    if (p.specificity < policy.value) continue;
    if (best == nullptr || p.sensitivity >= best->sensitivity) best = &p;
  }
  if (best != nullptr) return {best->threshold, false};

  for (const auto& p : points) {
    if (best == nullptr || p.specificity > best->specificity ||
        (p.specificity == best->specificity && p.sensitivity >= best->sensitivity)) {
      best = &p;
    }
  }
  return {best->threshold, true};
}

Selection SelectModel(std::span<const EvalMetrics> candidates) {
  if (candidates.empty()) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "no candidate models to select from");
  }
  auto key = [](const EvalMetrics& m) {
    return std::tuple(m.sensitivity, m.rocauc, m.specificity);
  };
  Selection selection;
  for (size_t i = 1; i < candidates.size(); ++i) {
    if (key(candidates[i]) > key(candidates[selection.index])) selection.index = i;
  }
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (i != selection.index && key(candidates[i]) == key(candidates[selection.index])) {
      selection.tie_broken_by_order = true;
    }
  }
  return selection;
}

std::vector<Label> LabelsOf(const Dataset& dataset) {
  std::vector<Label> labels;
  labels.reserve(dataset.size());
  for (size_t i = 0; i < dataset.size(); ++i) {
    if (!dataset.records[i].label) {
      throw Error(ErrorCode::kInvalidArgument, kModule,
                  "record " + std::to_string(i) + " has no label");
    }
    labels.push_back(*dataset.records[i].label);
  }
  return labels;
}

}  // namespace nephroscope
