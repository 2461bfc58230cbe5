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

// Partial dependence: pd(v) = mean over the dataset of the model output with
// one feature set to v. The usual caveat applies; the curve is only faithful
// when the feature is roughly independent of the others.

#ifndef NEPHROSCOPE_DEPENDENCE_H_
#define NEPHROSCOPE_DEPENDENCE_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nephroscope/dataset.h"
#include "nephroscope/model.h"

namespace nephroscope {

struct GridSpec {
  // Used when `values` is empty: quantiles i/(n+1), i = 1..n, plus the
  // observed min and max, deduplicated.
  size_t n_points = 20;
  // Explicit grid in the dataset's (scaled) units.
  std::vector<double> values;

  static GridSpec Auto(size_t n_points = 20) { return {n_points, {}}; }
  static GridSpec Explicit(std::vector<double> values) { return {0, std::move(values)}; }
};

struct PDCurve {
  std::string feature;
  size_t feature_index = 0;
  std::vector<double> grid_scaled;
  // Equal to grid_scaled when the dataset has no scaler.
  std::vector<double> grid_raw;
  std::vector<double> pd_values;
  size_t n_averaged = 0;
};

// Binary features always use the grid {0, 1}.
PDCurve PartialDependence(const Model& model, const Dataset& dataset, std::string_view feature,
                          const GridSpec& grid = GridSpec::Auto());

// Curve value at an arbitrary point by linear interpolation, clamped to the
// grid ends.
double InterpolateCurve(const PDCurve& curve, double scaled_value);

}  // namespace nephroscope

#endif  // NEPHROSCOPE_DEPENDENCE_H_
