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

#include "nephroscope/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "csv.h"
#include "json_io.h"

namespace nephroscope {
namespace internal {
namespace {

double RawValue(const ScalerParams* scaler, size_t feature, double value) {
  return scaler != nullptr ? scaler->Unscale(feature, value) : value;
}

const char* OpSymbol(PredicateOp op) {
  switch (op) {
    case PredicateOp::kLessEqual:
      return "<=";
    case PredicateOp::kGreater:
      return ">";
    case PredicateOp::kEqual:
      return "=";
  }
  return "=";
}

}  // namespace

Json MetricsJson(const EvalMetrics& m) {
  return {{"sensitivity", m.sensitivity},
          {"specificity", m.specificity},
          {"rocauc", m.rocauc},
          {"threshold", m.threshold},
          {"confusion", {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"tn", m.counts.tn},
                         {"fn", m.counts.fn}}}};
}

Json RawRecordJson(std::span<const double> raw, const FeatureSchema& schema) {
  Json out = Json::object();
  for (size_t f = 0; f < schema.size(); ++f) out[schema.spec(f).name] = raw[f];
  return out;
}

Json SchemaJson(const FeatureSchema& schema) {
  Json features = Json::array();
  for (const auto& spec : schema.specs()) {
    Json f = {{"name", spec.name},
              {"kind", spec.is_binary() ? "binary" : "numeric"},
              {"unit", spec.unit},
              {"missing_allowed", spec.missing_allowed},
              {"risk_factor", spec.risk_factor}};
    if (spec.allowed_range) f["allowed_range"] = {spec.allowed_range->lo, spec.allowed_range->hi};
    features.push_back(f);
  }
  return {{"target", schema.target_name()}, {"hash", schema.Hash()}, {"features", features}};
}

Json AttributionJson(const Attribution& a, const FeatureSchema& schema, const ScalerParams* scaler) {
  std::vector<size_t> order(a.phis.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) {
    return std::abs(a.phis[x]) > std::abs(a.phis[y]);
  });
  Json rows = Json::array();
  for (size_t r = 0; r < order.size(); ++r) {
    const size_t f = order[r];
    rows.push_back({{"feature", schema.spec(f).name},
                    {"phi", a.phis[f]},
                    {"value", RawValue(scaler, f, a.instance[f])},
                    {"value_scaled", a.instance[f]},
                    {"rank", r + 1}});
  }
  return {{"base_value", a.base_value},
          {"prediction", a.prediction},
          {"background_size", a.background_size},
          {"exact", a.exact},
          {"attributions", rows}};
}

Json GlobalSummaryJson(const GlobalSummary& s) {
  Json ranking = Json::array();
  for (size_t f : s.ranking) {
    ranking.push_back({{"feature", s.features[f].feature},
                       {"mean_abs_phi", s.features[f].mean_abs_phi},
                       {"rank", s.features[f].rank}});
  }
  Json points = Json::array();
  for (size_t i = 0; i < s.record_ids.size(); ++i) {
    for (const auto& feature : s.features) {
      points.push_back({{"instance_id", s.record_ids[i]},
                        {"feature", feature.feature},
                        {"phi", feature.points[i].first},
                        {"raw_value", feature.points[i].second}});
    }
  }
  return {{"explained", s.record_ids.size()}, {"ranking", ranking}, {"points", points}};
}

Json PrototypeSetJson(const PrototypeSet& set, const Dataset& dataset) {
  const ScalerParams* scaler = dataset.scaler ? &*dataset.scaler : nullptr;
  Json members = Json::array();
  for (const auto& p : set.members) {
    const auto& values = dataset.records[p.index].values;
    std::vector<double> raw(values.size());
    for (size_t f = 0; f < values.size(); ++f) raw[f] = RawValue(scaler, f, values[f]);
    members.push_back({{"index", p.index},
                       {"record_id", p.id},
                       {"class", LabelName(p.coverage_class)},
                       {"predicted_class", LabelName(p.predicted_class)},
                       {"probability", p.probability},
                       {"covered_count", p.covered_count},
                       {"values", RawRecordJson(raw, dataset.schema)}});
  }
  return {{"epsilon", set.epsilon}, {"objective_trace", set.objective_trace}, {"prototypes", members}};
}

Json CounterfactualJson(const CounterfactualPair& pair, const FeatureSchema& schema,
                        const ScalerParams* scaler) {
  std::vector<double> reference(pair.reference.size());
  std::vector<double> counterfactual(pair.reference.size());
  for (size_t f = 0; f < reference.size(); ++f) {
    reference[f] = RawValue(scaler, f, pair.reference[f]);
    counterfactual[f] = RawValue(scaler, f, pair.counterfactual.values[f]);
  }
  Json changed = Json::array();
  for (const auto& c : pair.changed_features) {
    changed.push_back({{"feature", c.name},
                       {"reference", c.reference_value},
                       {"counterfactual", c.counterfactual_value}});
  }
  return {{"found", true},
          {"distance", pair.distance},
          {"pool_index", pair.pool_index},
          {"record_id", pair.counterfactual.id},
          {"reference_prediction", LabelName(pair.reference_prediction)},
          {"counterfactual_prediction", LabelName(pair.counterfactual_prediction)},
          {"reference_probability", pair.reference_probability},
          {"counterfactual_probability", pair.counterfactual_probability},
          {"reference", RawRecordJson(reference, schema)},
          {"counterfactual", RawRecordJson(counterfactual, schema)},
          {"changed_features", changed}};
}

Json CurveJson(const PDCurve& curve) {
  Json points = Json::array();
  for (size_t i = 0; i < curve.pd_values.size(); ++i) {
    points.push_back({{"feature_value_raw", curve.grid_raw[i]},
                      {"feature_value_scaled", curve.grid_scaled[i]},
                      {"pd", curve.pd_values[i]}});
  }
  return {{"feature", curve.feature}, {"n_averaged", curve.n_averaged}, {"points", points}};
}

Json AnchorJson(const AnchorRule& rule, const FeatureSchema& schema, const ScalerParams* scaler) {
  Json predicates = Json::array();
  for (const auto& p : rule.predicates) {
    predicates.push_back({{"feature", schema.spec(p.feature).name},
                          {"op", OpSymbol(p.op)},
                          {"value", RawValue(scaler, p.feature, p.value)},
                          {"value_scaled", p.value}});
  }
  return {{"rule", FormatRule(rule, schema, scaler)},
          {"predicates", predicates},
          {"class", LabelName(rule.predicted_class)},
          {"precision", rule.precision},
          {"precision_lower", rule.precision_lower},
          {"coverage", rule.coverage},
          {"samples", rule.samples_used},
          {"below_target", rule.below_target}};
}

Json SafetyReportJson(const SafetyReport& report) {
  Json verdicts = Json::array();
  for (const auto& v : report.verdicts) {
    Json j = {{"id", v.case_id},
              {"description", v.description},
              {"status", VerdictStatusName(v.status)},
              {"severity", SeverityName(v.severity)},
              {"expected_class", LabelName(v.expected_class)}};
    if (v.status != VerdictStatus::kError) {
      j["predicted_class"] = LabelName(*v.predicted_class);
      j["probability_ckd"] = v.probability_ckd;
      j["probability_expected"] = v.probability_expected;
      j["margin"] = v.margin;
      j["class_ok"] = v.class_ok;
    }
    if (v.band) j["band"] = {v.band->lo, v.band->hi};
    if (v.band_ok) j["band_ok"] = *v.band_ok;
    j["blocking_failure"] = v.blocking_failure;
    j["message"] = v.message;
    j["warnings"] = v.warnings;
    verdicts.push_back(j);
  }
  Json orderings = Json::array();
  for (const auto& o : report.orderings) {
    Json j = {{"id", o.id},
              {"description", o.description},
              {"left", o.left},
              {"relation", o.relation},
              {"right", o.right},
              {"severity", SeverityName(o.severity)},
              {"satisfied", o.satisfied}};
    j["left_probability"] = o.left_probability ? Json(*o.left_probability) : Json(nullptr);
    j["right_probability"] = o.right_probability ? Json(*o.right_probability) : Json(nullptr);
    j["blocking_failure"] = o.blocking_failure;
    j["message"] = o.message;
    orderings.push_back(j);
  }
  return {{"suite", report.suite},
          {"threshold", report.threshold},
          {"summary", {{"cases", report.verdicts.size()},
                       {"passed", report.passed},
                       {"failed", report.failed},
                       {"errors", report.errors},
                       {"blocking_failure", report.blocking_failure}}},
          {"verdicts", verdicts},
          {"orderings", orderings}};
}

Json ErrorAnalysisJson(const std::vector<ErrorAnalysis>& entries, const FeatureSchema& schema) {
  Json out = Json::array();
  for (const auto& e : entries) {
    Json top = Json::array();
    for (const auto& [f, phi] : e.top_attributions) {
      top.push_back({{"feature", schema.spec(f).name}, {"phi", phi}});
    }
    out.push_back({{"record_id", e.record_id},
                   {"truth", LabelName(e.truth)},
                   {"prediction", LabelName(e.prediction)},
                   {"probability_ckd", e.probability_ckd},
                   {"probability_ratio", {e.ratio_no_ckd, e.ratio_ckd}},
                   {"margin", e.margin},
                   {"top_attributions", top},
                   {"dominant_feature", schema.spec(e.dominant_feature).name},
                   {"counterfactual_distance",
                    e.counterfactual_distance ? Json(*e.counterfactual_distance) : Json(nullptr)},
                   {"present_risk_factors", e.present_risk_factors},
                   {"absent_risk_factors", e.absent_risk_factors}});
  }
  return out;
}

}  // namespace internal

namespace {

using internal::Json;

std::string Fixed(double value, int digits = 4) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", digits, value);
  return buffer;
}

std::string Num(double value) { return internal::FormatDouble(value); }

// Two decimals at most, trailing zeros dropped.
std::string Compact(double value) {
  std::string text = Fixed(value, 2);
  if (text.find('.') != std::string::npos) {
    while (text.back() == '0') text.pop_back();
    if (text.back() == '.') text.pop_back();
  }
  return text == "-0" ? "0" : text;
}

// The first `left` columns are left-aligned, the rest right-aligned.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header, size_t left = 1) : left_(left) {
    rows_.push_back(std::move(header));
  }
  void Add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  std::string Render() const {
    size_t columns = 0;
    for (const auto& r : rows_) columns = std::max(columns, r.size());
    std::vector<size_t> width(columns, 0);
    for (const auto& r : rows_) {
      for (size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    }
    std::string out;
    for (size_t i = 0; i < rows_.size(); ++i) {
      const auto& r = rows_[i];
      std::string line;
      for (size_t c = 0; c < columns; ++c) {
        const std::string cell = c < r.size() ? r[c] : "";
        const std::string pad(width[c] - cell.size(), ' ');
        if (c > 0) line += "  ";
        line += c < left_ ? cell + pad : pad + cell;
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out += line + "\n";
      if (i == 0) {
        size_t total = 0;
        for (size_t c = 0; c < columns; ++c) total += width[c] + (c > 0 ? 2 : 0);
        out += std::string(total, '-') + "\n";
      }
    }
    return out;
  }

 private:
  size_t left_;
  std::vector<std::vector<std::string>> rows_;
};

std::string DisplayValue(const FeatureSpec& spec, double raw) {
  if (spec.is_binary()) {
    if (EqualsIgnoreCase(spec.name, "gender")) return raw == 1.0 ? "man" : "woman";
    return raw == 1.0 ? "yes" : "no";
  }
  return Compact(raw);
}

std::string Dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string RenderTrainingJson(const TrainResult& r) {
  Json candidates = Json::array();
  for (size_t i = 0; i < r.candidates.size(); ++i) {
    const auto& c = r.candidates[i];
    Json cells = Json::array();
    for (const auto& cell : c.grid.cells) {
      cells.push_back({{"cell", DescribeCell(cell.overrides)},
                       {"mean_model_size", cell.mean_model_size},
                       {"cv_metrics", internal::MetricsJson(cell.metrics)}});
    }
    candidates.push_back({{"kind", ModelKindName(c.kind)},
                          {"best_cell", c.cell},
                          {"threshold", c.threshold.threshold},
                          {"floor_unattainable", c.threshold.floor_unattainable},
                          {"validation", internal::MetricsJson(c.validation)},
                          {"champion", i == r.selection.index},
                          {"grid", cells}});
  }
  Json warnings = Json::array();
  for (const auto& w : r.validation.warnings) {
    warnings.push_back({{"row", w.row}, {"column", w.column}, {"value", w.value}, {"message", w.message}});
  }
  const RunManifest& m = r.manifest;
  Json doc = {
      {"format", "nephroscope-metrics"},
      {"manifest_digest", m.Digest()},
      {"manifest",
       {{"tool_version", m.tool_version},
        {"config_digest", m.config_digest},
        {"dataset_digest", m.dataset_digest},
        {"schema_hash", m.schema_hash},
        {"schema_version", m.schema_version},
        {"seed", m.seed},
        {"champion", m.champion},
        {"threshold", m.threshold},
        {"threshold_policy", m.threshold_policy},
        {"created_at", m.created_at}}},
      {"data",
       {{"records", r.class_counts.labeled() + r.class_counts.unlabeled},
        {"positive", r.class_counts.positive},
        {"negative", r.class_counts.negative},
        {"train", r.train_size},
        {"test", r.test_size},
        {"train_resampled", r.resampled_train_size}}},
      {"champion",
       {{"kind", ModelKindName(r.candidates[r.selection.index].kind)},
        {"cell", m.champion},
        {"tie_broken_by_order", r.selection.tie_broken_by_order}}},
      {"test", internal::MetricsJson(r.test_metrics)},
      {"sensitivity", r.test_metrics.sensitivity},
      {"specificity", r.test_metrics.specificity},
      {"rocauc", r.test_metrics.rocauc},
      {"candidates", candidates},
      {"validation_warnings", warnings},
      {"warnings", r.warnings}};
  return Dump(doc);
}

std::string RenderTrainingText(const TrainResult& r) {
  const RunManifest& m = r.manifest;
  std::string out;
  out += "Run manifest " + m.Digest() + "\n";
  out += "  created      " + m.created_at + "\n";
  out += "  seed         " + std::to_string(m.seed) + "\n";
  out += "  config       " + m.config_digest + "\n";
  out += "  dataset      " + m.dataset_digest + "\n";
  out += "  champion     " + m.champion + "\n";
  out += "  threshold    " + Fixed(m.threshold) + " (" + m.threshold_policy + ")\n\n";
  out += "Data: " + std::to_string(r.class_counts.labeled()) + " records, " +
         std::to_string(r.class_counts.positive) + " CKD; train " + std::to_string(r.train_size) +
         " (resampled " + std::to_string(r.resampled_train_size) + "), test " +
         std::to_string(r.test_size) + "\n\n";
  TextTable candidates({"model", "best cell", "threshold", "sensitivity", "specificity", "rocauc", ""},
                       2);
  for (size_t i = 0; i < r.candidates.size(); ++i) {
    const auto& c = r.candidates[i];
    candidates.Add({std::string(ModelKindName(c.kind)), DescribeCell(c.grid.cells[c.grid.best].overrides),
                    Fixed(c.threshold.threshold), Fixed(c.validation.sensitivity),
                    Fixed(c.validation.specificity), Fixed(c.validation.rocauc),
                    i == r.selection.index ? "champion" : ""});
  }
  out += "Validation (pooled out-of-fold)\n" + candidates.Render() + "\n";
  const auto& t = r.test_metrics;
  TextTable test({"metric", "value"});
  test.Add({"sensitivity", Fixed(t.sensitivity)});
  test.Add({"specificity", Fixed(t.specificity)});
  test.Add({"rocauc", Fixed(t.rocauc)});
  test.Add({"tp/fp/tn/fn", std::to_string(t.counts.tp) + "/" + std::to_string(t.counts.fp) + "/" +
                               std::to_string(t.counts.tn) + "/" + std::to_string(t.counts.fn)});
  out += "Test partition\n" + test.Render();
  for (const auto& w : r.warnings) out += "warning: " + w + "\n";
  for (const auto& w : r.validation.warnings) {
    out += "warning: row " + std::to_string(w.row + 1) + ": " + w.message + "\n";
  }
  return out;
}

std::string RenderAttributionJson(const Attribution& a, const FeatureSchema& schema,
                                  const ScalerParams* scaler) {
  return Dump(internal::AttributionJson(a, schema, scaler));
}

std::string RenderAttributionText(const Attribution& a, const FeatureSchema& schema,
                                  const ScalerParams* scaler) {
  const Json j = internal::AttributionJson(a, schema, scaler);
  TextTable table({"rank", "feature", "value", "phi"}, 2);
  for (const auto& row : j["attributions"]) {
    table.Add({std::to_string(row["rank"].get<size_t>()), row["feature"].get<std::string>(),
               DisplayValue(schema.spec(*schema.IndexOf(row["feature"].get<std::string>())),
                            row["value"].get<double>()),
               Fixed(row["phi"].get<double>(), 6)});
  }
  return "base value " + Fixed(a.base_value, 6) + ", prediction " + Fixed(a.prediction, 6) + "\n" +
         table.Render();
}

std::string RenderGlobalSummaryJson(const GlobalSummary& s) {
  return Dump(internal::GlobalSummaryJson(s));
}

std::string RenderGlobalSummaryText(const GlobalSummary& s) {
  TextTable table({"rank", "feature", "mean |phi|"}, 2);
  for (size_t f : s.ranking) {
    table.Add({std::to_string(s.features[f].rank), s.features[f].feature,
               Fixed(s.features[f].mean_abs_phi, 6)});
  }
  return "Global attribution over " + std::to_string(s.record_ids.size()) + " records\n" +
         table.Render();
}

std::string GlobalSummaryCsv(const GlobalSummary& s) {
  std::string out = "feature,mean_abs_phi,rank\n";
  for (size_t f : s.ranking) {
    out += s.features[f].feature + "," + Num(s.features[f].mean_abs_phi) + "," +
           std::to_string(s.features[f].rank) + "\n";
  }
  return out;
}

std::string GlobalPointsCsv(const GlobalSummary& s) {
  std::string out = "instance_id,feature,phi,raw_value\n";
  for (size_t i = 0; i < s.record_ids.size(); ++i) {
    for (const auto& feature : s.features) {
      out += std::to_string(s.record_ids[i]) + "," + feature.feature + "," +
             Num(feature.points[i].first) + "," + Num(feature.points[i].second) + "\n";
    }
  }
  return out;
}

std::string RenderPrototypesJson(const PrototypeSet& prototypes, const Dataset& dataset) {
  return Dump(internal::PrototypeSetJson(prototypes, dataset));
}

std::string RenderPrototypesText(const PrototypeSet& prototypes, const Dataset& dataset) {
  std::vector<std::string> header = {"feature"};
  for (size_t i = 0; i < prototypes.members.size(); ++i) header.push_back("P" + std::to_string(i + 1));
  TextTable table(header);
  for (size_t f = 0; f < dataset.schema.size(); ++f) {
    std::vector<std::string> row = {dataset.schema.spec(f).name};
    for (const auto& p : prototypes.members) {
      const double v = dataset.records[p.index].values[f];
      const double raw = dataset.scaler ? dataset.scaler->Unscale(f, v) : v;
      row.push_back(DisplayValue(dataset.schema.spec(f), raw));
    }
    table.Add(row);
  }
  std::vector<std::string> cls = {"class"};
  std::vector<std::string> covered = {"covered"};
  for (const auto& p : prototypes.members) {
    cls.push_back(std::string(LabelName(p.coverage_class)));
    covered.push_back(std::to_string(p.covered_count));
  }
  table.Add(cls);
  table.Add(covered);
  return "Prototypes (epsilon " + Fixed(prototypes.epsilon) + ")\n" + table.Render();
}

std::string RenderCounterfactualJson(const std::optional<CounterfactualPair>& pair,
                                     const FeatureSchema& schema, const ScalerParams* scaler) {
  if (!pair) return Dump(Json{{"found", false}, {"message", "no record with the opposite prediction"}});
  return Dump(internal::CounterfactualJson(*pair, schema, scaler));
}

std::string RenderCounterfactualText(const std::optional<CounterfactualPair>& pair,
                                     const FeatureSchema& schema, const ScalerParams* scaler) {
  if (!pair) return "No counterfactual: no pool record has the opposite prediction.\n";
  TextTable table({"feature", "reference", "counterfactual", ""});
  for (size_t f = 0; f < schema.size(); ++f) {
    const double a = scaler ? scaler->Unscale(f, pair->reference[f]) : pair->reference[f];
    const double b = scaler ? scaler->Unscale(f, pair->counterfactual.values[f])
                            : pair->counterfactual.values[f];
    table.Add({schema.spec(f).name, DisplayValue(schema.spec(f), a), DisplayValue(schema.spec(f), b),
               pair->reference[f] != pair->counterfactual.values[f] ? "*" : ""});
  }
  table.Add({"prediction", std::string(LabelName(pair->reference_prediction)),
             std::string(LabelName(pair->counterfactual_prediction)), ""});
  table.Add({"P(CKD)", Fixed(pair->reference_probability), Fixed(pair->counterfactual_probability), ""});
  return "Counterfactual (record " + std::to_string(pair->counterfactual.id) + ", distance " +
         Fixed(pair->distance) + ")\n" + table.Render();
}

std::string RenderCurveJson(const PDCurve& curve) { return Dump(internal::CurveJson(curve)); }

std::string RenderCurveText(const PDCurve& curve) {
  TextTable table({curve.feature, "scaled", "pd"});
  for (size_t i = 0; i < curve.pd_values.size(); ++i) {
    table.Add({Compact(curve.grid_raw[i]), Fixed(curve.grid_scaled[i]), Fixed(curve.pd_values[i])});
  }
  return "Partial dependence on " + curve.feature + " (" + std::to_string(curve.n_averaged) +
         " records)\n" + table.Render();
}

std::string CurveCsv(const PDCurve& curve) {
  std::string out = "feature_value_raw,feature_value_scaled,pd\n";
  for (size_t i = 0; i < curve.pd_values.size(); ++i) {
    out += Num(curve.grid_raw[i]) + "," + Num(curve.grid_scaled[i]) + "," + Num(curve.pd_values[i]) + "\n";
  }
  return out;
}

std::string RenderAnchorJson(const AnchorRule& rule, const FeatureSchema& schema,
                             const ScalerParams* scaler) {
  return Dump(internal::AnchorJson(rule, schema, scaler));
}

std::string RenderAnchorText(const AnchorRule& rule, const FeatureSchema& schema,
                             const ScalerParams* scaler) {
  std::string out = FormatRule(rule, schema, scaler) + "\n";
  if (rule.below_target) out += "warning: no rule reached the precision target\n";
  return out;
}

std::string RenderSafetyJson(const SafetyReport& report) {
  return Dump(internal::SafetyReportJson(report));
}

std::string RenderSafetyText(const SafetyReport& report) {
  TextTable cases({"case", "severity", "expected", "predicted", "P(expected)", "band", "status"});
  for (const auto& v : report.verdicts) {
    const bool scored = v.status != VerdictStatus::kError;
    cases.Add({v.case_id, std::string(SeverityName(v.severity)),
               std::string(LabelName(v.expected_class)),
               scored ? std::string(LabelName(*v.predicted_class)) : "-",
               scored ? Fixed(v.probability_expected) : "-",
               v.band ? "[" + Fixed(v.band->lo, 2) + ", " + Fixed(v.band->hi, 2) + "]" : "-",
               std::string(VerdictStatusName(v.status)) + (v.blocking_failure ? " (blocking)" : "")});
  }
  std::string out = "Safety suite " + report.suite + " at threshold " + Fixed(report.threshold) + "\n" +
                    cases.Render();
  for (const auto& v : report.verdicts) {
    if (!v.message.empty()) out += v.case_id + ": " + v.message + "\n";
  }
  if (!report.orderings.empty()) {
    TextTable orderings({"ordering", "assertion", "P(CKD) left", "P(CKD) right", "status"});
    for (const auto& o : report.orderings) {
      orderings.Add({o.id, o.left + " " + o.relation + " " + o.right,
                     o.left_probability ? Fixed(*o.left_probability) : "-",
                     o.right_probability ? Fixed(*o.right_probability) : "-",
                     o.satisfied ? "satisfied" : (o.blocking_failure ? "violated (blocking)" : "violated")});
    }
    out += "\n" + orderings.Render();
  }
  out += "\n" + std::to_string(report.passed) + " passed, " + std::to_string(report.failed) +
         " failed, " + std::to_string(report.errors) + " errors" +
         (report.blocking_failure ? "; BLOCKING FAILURE" : "") + "\n";
  return out;
}

std::string RenderErrorAnalysisJson(const std::vector<ErrorAnalysis>& entries,
                                    const FeatureSchema& schema) {
  return Dump(internal::ErrorAnalysisJson(entries, schema));
}

std::string RenderErrorAnalysisText(const std::vector<ErrorAnalysis>& entries,
                                    const FeatureSchema& schema) {
  if (entries.empty()) return "No mispredictions.\n";
  std::string out;
  for (const auto& e : entries) {
    out += "record " + std::to_string(e.record_id) + ": truth " + std::string(LabelName(e.truth)) +
           ", predicted " + std::string(LabelName(e.prediction)) + " at " + Fixed(e.ratio_no_ckd, 2) +
           ":" + Fixed(e.ratio_ckd, 2) + " (noCKD:CKD), margin " + Fixed(e.margin) + "\n";
    out += "  top attributions:";
    for (const auto& [f, phi] : e.top_attributions) {
      out += " " + schema.spec(f).name + "=" + Fixed(phi, 4);
    }
    out += "\n  dominant feature: " + schema.spec(e.dominant_feature).name;
    out += e.counterfactual_distance ? ", counterfactual distance " + Fixed(*e.counterfactual_distance)
                                     : ", no counterfactual";
    out += "\n  risk factors present:";
    for (const auto& name : e.present_risk_factors) out += " " + name;
    if (e.present_risk_factors.empty()) out += " none";
    out += "\n";
  }
  return out;
}

}  // namespace nephroscope
