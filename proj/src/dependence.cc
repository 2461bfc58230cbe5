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

#include "nephroscope/dependence.h"

#include <algorithm>
#include <cmath>

#include "nephroscope/parallel.h"
#include "nephroscope/status.h"

namespace nephroscope {
namespace {

constexpr char kModule[] = "dependence";

// Linear-interpolation quantile (type 7).
double Quantile(const std::vector<double>& sorted, double q) {
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

PDCurve PartialDependence(const Model& model, const Dataset& dataset, std::string_view feature,
                          const GridSpec& grid) {
  if (dataset.empty()) throw Error(ErrorCode::kInvalidArgument, kModule, "dataset is empty");
  const auto index = dataset.schema.IndexOf(feature);
  if (!index) {
    throw Error(ErrorCode::kNotFound, kModule, "unknown feature '" + std::string(feature) + "'");
  }
  const size_t f = *index;
  PDCurve curve;
  curve.feature = dataset.schema.spec(f).name;
  curve.feature_index = f;

  if (dataset.schema.spec(f).is_binary()) {
    curve.grid_scaled = {0.0, 1.0};
  } else if (!grid.values.empty()) {
    curve.grid_scaled = grid.values;
    for (double v : curve.grid_scaled) {
      if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, kModule, "grid value is not finite");
    }
    std::sort(curve.grid_scaled.begin(), curve.grid_scaled.end());
    curve.grid_scaled.erase(std::unique(curve.grid_scaled.begin(), curve.grid_scaled.end()),
                            curve.grid_scaled.end());
  } else {
    if (grid.n_points == 0) throw Error(ErrorCode::kInvalidArgument, kModule, "empty grid");
    std::vector<double> column;
    column.reserve(dataset.size());
    for (const auto& record : dataset.records) column.push_back(record.values[f]);
    std::sort(column.begin(), column.end());
    curve.grid_scaled.push_back(column.front());
    for (size_t i = 1; i <= grid.n_points; ++i) {
      curve.grid_scaled.push_back(
          Quantile(column, static_cast<double>(i) / static_cast<double>(grid.n_points + 1)));
    }
    curve.grid_scaled.push_back(column.back());
    std::sort(curve.grid_scaled.begin(), curve.grid_scaled.end());
    curve.grid_scaled.erase(std::unique(curve.grid_scaled.begin(), curve.grid_scaled.end()),
                            curve.grid_scaled.end());
  }
  if (curve.grid_scaled.empty()) throw Error(ErrorCode::kInvalidArgument, kModule, "empty grid");

  for (size_t i = 0; i < dataset.size(); ++i) {
    const auto& values = dataset.records[i].values;
    if (values.size() != model.feature_count()) {
      throw Error(ErrorCode::kSchemaMismatch, kModule, "dataset width does not match model");
    }
    for (size_t j = 0; j < values.size(); ++j) {
      if (j != f && !std::isfinite(values[j])) {
        throw Error(ErrorCode::kInvalidArgument, kModule,
                    "record " + std::to_string(i) + " has a missing value");
      }
    }
  }

  curve.pd_values.assign(curve.grid_scaled.size(), 0.0);
  ParallelFor(curve.grid_scaled.size(), [&](size_t g) {
    std::vector<double> row;
    double sum = 0.0;
    for (const auto& record : dataset.records) {
      row = record.values;
      row[f] = curve.grid_scaled[g];
      sum += model.Predict(row);
    }
    curve.pd_values[g] = sum / static_cast<double>(dataset.size());
  });
  curve.n_averaged = dataset.size();
  for (double v : curve.grid_scaled) {
    curve.grid_raw.push_back(dataset.scaler ? dataset.scaler->Unscale(f, v) : v);
  }
  return curve;
}

double InterpolateCurve(const PDCurve& curve, double scaled_value) {
  const auto& x = curve.grid_scaled;
  if (x.empty()) throw Error(ErrorCode::kInvalidArgument, kModule, "empty curve");
  if (scaled_value <= x.front()) return curve.pd_values.front();
  if (scaled_value >= x.back()) return curve.pd_values.back();
  const size_t hi = static_cast<size_t>(std::upper_bound(x.begin(), x.end(), scaled_value) - x.begin());
  const size_t lo = hi - 1;
  const double t = (scaled_value - x[lo]) / (x[hi] - x[lo]);
  return curve.pd_values[lo] + t * (curve.pd_values[hi] - curve.pd_values[lo]);
}

}  // namespace nephroscope
