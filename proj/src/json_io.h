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

// JSON views of module outputs, shared by reports, the service and the C API.

#ifndef NEPHROSCOPE_SRC_JSON_IO_H_
#define NEPHROSCOPE_SRC_JSON_IO_H_

#include <span>
#include <vector>

#include <json.hpp>

#include "nephroscope/anchors.h"
#include "nephroscope/dependence.h"
#include "nephroscope/evaluation.h"
#include "nephroscope/local_explain.h"
#include "nephroscope/safety.h"
#include "nephroscope/shap.h"

namespace nephroscope::internal {

using Json = nlohmann::ordered_json;

Json MetricsJson(const EvalMetrics& metrics);
// {feature: raw value} in schema order.
Json RawRecordJson(std::span<const double> raw, const FeatureSchema& schema);
// Features ranked by |phi|; raw values when a scaler is given.
Json AttributionJson(const Attribution& attribution, const FeatureSchema& schema,
                     const ScalerParams* scaler);
Json GlobalSummaryJson(const GlobalSummary& summary);
Json PrototypeSetJson(const PrototypeSet& prototypes, const Dataset& dataset);
Json CounterfactualJson(const CounterfactualPair& pair, const FeatureSchema& schema,
                        const ScalerParams* scaler);
Json CurveJson(const PDCurve& curve);
Json AnchorJson(const AnchorRule& rule, const FeatureSchema& schema, const ScalerParams* scaler);
Json SafetyReportJson(const SafetyReport& report);
Json ErrorAnalysisJson(const std::vector<ErrorAnalysis>& entries, const FeatureSchema& schema);
Json SchemaJson(const FeatureSchema& schema);

}  // namespace nephroscope::internal

#endif  // NEPHROSCOPE_SRC_JSON_IO_H_
