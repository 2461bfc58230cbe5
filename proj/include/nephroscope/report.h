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

// Machine-readable (JSON, CSV) and plain-text renderings of every report.

#ifndef NEPHROSCOPE_REPORT_H_
#define NEPHROSCOPE_REPORT_H_

#include <optional>
#include <string>
#include <vector>

#include "nephroscope/anchors.h"
#include "nephroscope/dependence.h"
#include "nephroscope/local_explain.h"
#include "nephroscope/pipeline.h"
#include "nephroscope/safety.h"
#include "nephroscope/shap.h"

namespace nephroscope {

std::string RenderTrainingJson(const TrainResult& result);
std::string RenderTrainingText(const TrainResult& result);

std::string RenderAttributionJson(const Attribution& attribution, const FeatureSchema& schema,
                                  const ScalerParams* scaler);
std::string RenderAttributionText(const Attribution& attribution, const FeatureSchema& schema,
                                  const ScalerParams* scaler);

std::string RenderGlobalSummaryJson(const GlobalSummary& summary);
std::string RenderGlobalSummaryText(const GlobalSummary& summary);
// feature,mean_abs_phi,rank
std::string GlobalSummaryCsv(const GlobalSummary& summary);
// instance_id,feature,phi,raw_value
std::string GlobalPointsCsv(const GlobalSummary& summary);

// `dataset` is the scaled dataset the prototypes were drawn from.
std::string RenderPrototypesJson(const PrototypeSet& prototypes, const Dataset& dataset);
// Feature rows, one column per prototype.
std::string RenderPrototypesText(const PrototypeSet& prototypes, const Dataset& dataset);

std::string RenderCounterfactualJson(const std::optional<CounterfactualPair>& pair,
                                     const FeatureSchema& schema, const ScalerParams* scaler);
// Reference and counterfactual columns; changed rows are marked with '*'.
std::string RenderCounterfactualText(const std::optional<CounterfactualPair>& pair,
                                     const FeatureSchema& schema, const ScalerParams* scaler);

std::string RenderCurveJson(const PDCurve& curve);
std::string RenderCurveText(const PDCurve& curve);
// feature_value_raw,feature_value_scaled,pd
std::string CurveCsv(const PDCurve& curve);

std::string RenderAnchorJson(const AnchorRule& rule, const FeatureSchema& schema,
                             const ScalerParams* scaler);
std::string RenderAnchorText(const AnchorRule& rule, const FeatureSchema& schema,
                             const ScalerParams* scaler);

std::string RenderSafetyJson(const SafetyReport& report);
std::string RenderSafetyText(const SafetyReport& report);

std::string RenderErrorAnalysisJson(const std::vector<ErrorAnalysis>& entries,
                                    const FeatureSchema& schema);
std::string RenderErrorAnalysisText(const std::vector<ErrorAnalysis>& entries,
                                    const FeatureSchema& schema);

}  // namespace nephroscope

#endif  // NEPHROSCOPE_REPORT_H_
