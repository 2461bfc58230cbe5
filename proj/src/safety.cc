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

#include "nephroscope/safety.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <yaml-cpp/yaml.h>

#include "csv.h"
#include "nephroscope/digest.h"
#include "nephroscope/local_explain.h"
#include "nephroscope/parallel.h"
#include "nephroscope/status.h"

namespace nephroscope {

// Defined in the generated bundled_suite.cc.
extern const char kBundledSuiteYaml[];

namespace {

constexpr char kModule[] = "safety";

std::optional<Severity> ParseSeverity(const std::string& text) {
  if (EqualsIgnoreCase(text, "blocking")) return Severity::kBlocking;
  if (EqualsIgnoreCase(text, "warning")) return Severity::kWarning;
  return std::nullopt;
}

std::string ScalarText(const YAML::Node& node) {
  if (!node || !node.IsScalar()) return {};
  return node.as<std::string>();
}

// Reads one case; problems are recorded on case.malformed.
SafetyCase ParseCase(const YAML::Node& node, size_t position) {
  SafetyCase c;
  c.id = "case_" + std::to_string(position + 1);
  auto fail = [&](const std::string& message) {
    if (!c.malformed) c.malformed = message;
  };
  if (!node.IsMap()) {
    fail("case entry is not a mapping");
    return c;
  }
  if (node["id"] && node["id"].IsScalar()) {
    c.id = node["id"].as<std::string>();
  } else {
    fail("case has no id");
  }
  c.description = ScalarText(node["description"]);
  if (node["severity"]) {
    if (auto s = ParseSeverity(ScalarText(node["severity"]))) {
      c.severity = *s;
    } else {
      fail("severity must be 'blocking' or 'warning'");
    }
  }
  if (node["band_severity"]) {
    if (auto s = ParseSeverity(ScalarText(node["band_severity"]))) {
      c.band_severity = *s;
    } else {
      fail("band_severity must be 'blocking' or 'warning'");
    }
  }
  const YAML::Node expectation = node["expectation"];
  if (!expectation || !expectation.IsMap()) {
    fail("case has no expectation");
  } else {
    const auto label = internal::ParseLabel(ScalarText(expectation["class"]));
    if (!label) {
      fail("expectation.class must be CKD or noCKD");
    } else {
      c.expected_class = *label;
    }
    const YAML::Node band = expectation["band"];
    if (band) {
      const bool pair = band.IsSequence() && band.size() == 2;
      const double lo = pair ? internal::ParseNumber(ScalarText(band[0])).value_or(kMissing) : kMissing;
      const double hi = pair ? internal::ParseNumber(ScalarText(band[1])).value_or(kMissing) : kMissing;
      if (!(lo >= 0.0 && lo <= hi && hi <= 1.0)) {
        fail("expectation.band must be [lo, hi] with 0 <= lo <= hi <= 1");
      } else {
        c.band = ProbabilityBand{lo, hi};
      }
    }
  }
  const YAML::Node input = node["input"];
  if (!input || !input.IsMap()) {
    fail("case has no input mapping");
  } else {
    for (const auto& item : input) {
      const std::string name = item.first.as<std::string>();
      const std::string text = ScalarText(item.second);
      auto value = internal::ParseNumber(text);
      if (!value) value = internal::ParseBinary(text);
      if (!value) {
        fail("input '" + name + "' is not a number: '" + text + "'");
        continue;
      }
      c.input.emplace_back(name, *value);
    }
  }
  return c;
}

// Scales a case input; returns an error message when it does not match the
// schema.
std::optional<std::string> BuildRow(const SafetyCase& c, const FeatureSchema& schema,
                                    std::vector<double>* raw, std::vector<std::string>* warnings) {
  raw->assign(schema.size(), kMissing);
  std::vector<bool> seen(schema.size(), false);
  for (const auto& [name, value] : c.input) {
    const auto index = schema.IndexOf(name);
    if (!index) return "unknown feature '" + name + "'";
    if (seen[*index]) return "feature '" + name + "' given twice";
    seen[*index] = true;
    std::string warning;
    if (auto problem = ValidateValue(schema.spec(*index), value, &warning)) return *problem;
    if (!warning.empty()) warnings->push_back(warning);
    (*raw)[*index] = value;
  }
  for (size_t f = 0; f < schema.size(); ++f) {
    if (!seen[f]) return "missing feature '" + schema.spec(f).name + "'";
  }
  return std::nullopt;
}

bool Compare(double left, const std::string& relation, double right) {
  if (relation == ">") return left > right;
  if (relation == ">=") return left >= right;
  if (relation == "<") return left < right;
  return left <= right;
}

}  // namespace

std::string_view SeverityName(Severity severity) {
  return severity == Severity::kBlocking ? "blocking" : "warning";
}

std::string_view VerdictStatusName(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::kPass:
      return "pass";
    case VerdictStatus::kFail:
      return "fail";
    case VerdictStatus::kError:
      return "error";
  }
  return "error";
}

SafetySuite ParseSuite(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kDataError, kModule, std::string("unparseable suite: ") + e.what());
  }
  if (!root.IsMap()) throw Error(ErrorCode::kDataError, kModule, "suite must be a mapping");
  SafetySuite suite;
  suite.name = ScalarText(root["name"]);
  if (suite.name.empty()) suite.name = "unnamed-suite";
  suite.description = ScalarText(root["description"]);
  const YAML::Node cases = root["cases"];
  if (cases && !cases.IsNull()) {
    if (!cases.IsSequence()) throw Error(ErrorCode::kDataError, kModule, "'cases' must be a list");
    for (size_t i = 0; i < cases.size(); ++i) suite.cases.push_back(ParseCase(cases[i], i));
  }
  std::map<std::string, size_t> ids;
  for (auto& c : suite.cases) {
    if (++ids[c.id] > 1 && !c.malformed) c.malformed = "duplicate case id '" + c.id + "'";
  }
  const YAML::Node orderings = root["orderings"];
  if (orderings && !orderings.IsNull()) {
    if (!orderings.IsSequence()) {
      throw Error(ErrorCode::kDataError, kModule, "'orderings' must be a list");
    }
    for (size_t i = 0; i < orderings.size(); ++i) {
      const YAML::Node node = orderings[i];
      OrderingAssertion a;
      a.id = ScalarText(node["id"]);
      if (a.id.empty()) a.id = "ordering_" + std::to_string(i + 1);
      a.description = ScalarText(node["description"]);
      a.left = ScalarText(node["left"]);
      a.right = ScalarText(node["right"]);
      a.relation = ScalarText(node["relation"]);
      if (a.left.empty() || a.right.empty()) {
        throw Error(ErrorCode::kDataError, kModule, "ordering '" + a.id + "' needs left and right");
      }
      if (a.relation != ">" && a.relation != ">=" && a.relation != "<" && a.relation != "<=") {
        throw Error(ErrorCode::kDataError, kModule,
                    "ordering '" + a.id + "' relation must be one of > >= < <=");
      }
      if (node["severity"]) {
        auto s = ParseSeverity(ScalarText(node["severity"]));
        if (!s) throw Error(ErrorCode::kDataError, kModule, "ordering '" + a.id + "' has a bad severity");
        a.severity = *s;
      }
      suite.orderings.push_back(std::move(a));
    }
  }
  return suite;
}

SafetySuite LoadSuite(const std::filesystem::path& path) {
  return ParseSuite(ReadFileBytes(path));
}

std::string_view BundledSuiteYaml() { return kBundledSuiteYaml; }

SafetySuite BundledSuite() { return ParseSuite(BundledSuiteYaml()); }

SafetyReport RunSuite(const SafetySuite& suite, const Model& model, const ScalerParams& scaler,
                      const FeatureSchema& schema, double threshold) {
  if (scaler.schema_hash != schema.Hash() || model.feature_count() != schema.size()) {
    throw Error(ErrorCode::kSchemaMismatch, kModule, "scaler or model does not match the schema");
  }
  SafetyReport report;
  report.suite = suite.name;
  report.threshold = threshold;
  report.verdicts.resize(suite.cases.size());
  ParallelFor(suite.cases.size(), [&](size_t i) {
    const SafetyCase& c = suite.cases[i];
    SafetyVerdict& v = report.verdicts[i];
    v.case_id = c.id;
    v.description = c.description;
    v.severity = c.severity;
    v.expected_class = c.expected_class;
    v.band = c.band;
    std::vector<double> raw;
    std::optional<std::string> problem = c.malformed;
    if (!problem) problem = BuildRow(c, schema, &raw, &v.warnings);
    if (problem) {
      v.status = VerdictStatus::kError;
      v.message = *problem;
      v.blocking_failure = c.severity == Severity::kBlocking;
      return;
    }
    const std::vector<double> row = scaler.ScaleRow(raw);
    v.probability_ckd = model.Predict(row);
    v.predicted_class = v.probability_ckd >= threshold ? Label::kCkd : Label::kNoCkd;
    v.probability_expected =
        c.expected_class == Label::kCkd ? v.probability_ckd : 1.0 - v.probability_ckd;
    v.margin = std::abs(v.probability_ckd - threshold);
    v.class_ok = *v.predicted_class == c.expected_class;
    if (c.band) v.band_ok = v.probability_expected >= c.band->lo && v.probability_expected <= c.band->hi;
    const bool band_failed = v.band_ok.has_value() && !*v.band_ok;
    v.status = v.class_ok && !band_failed ? VerdictStatus::kPass : VerdictStatus::kFail;
    v.blocking_failure = (!v.class_ok && c.severity == Severity::kBlocking) ||
                         (band_failed && c.band_severity == Severity::kBlocking);
    if (!v.class_ok) {
      v.message = "expected " + std::string(LabelName(c.expected_class)) + ", predicted " +
                  std::string(LabelName(*v.predicted_class));
    } else if (band_failed) {
      v.message = "probability " + internal::FormatDouble(v.probability_expected) +
                  " outside band [" + internal::FormatDouble(c.band->lo) + ", " +
                  internal::FormatDouble(c.band->hi) + "]";
    }
  });

  std::map<std::string, const SafetyVerdict*> by_id;
  for (const auto& v : report.verdicts) by_id.emplace(v.case_id, &v);
  for (const auto& a : suite.orderings) {
    OrderingVerdict o;
    o.id = a.id;
    o.description = a.description;
    o.left = a.left;
    o.relation = a.relation;
    o.right = a.right;
    o.severity = a.severity;
    auto probability = [&](const std::string& id) -> std::optional<double> {
      auto it = by_id.find(id);
      if (it == by_id.end() || it->second->status == VerdictStatus::kError) return std::nullopt;
      return it->second->probability_ckd;
    };
    o.left_probability = probability(a.left);
    o.right_probability = probability(a.right);
    if (!o.left_probability || !o.right_probability) {
      o.message = "ordering refers to a missing or failed case";
    } else {
      o.satisfied = Compare(*o.left_probability, a.relation, *o.right_probability);
      if (!o.satisfied) {
        o.message = "P(CKD) of " + a.left + " (" + internal::FormatDouble(*o.left_probability) +
                    ") is not " + a.relation + " that of " + a.right + " (" +
                    internal::FormatDouble(*o.right_probability) + ")";
      }
    }
    o.blocking_failure = !o.satisfied && a.severity == Severity::kBlocking;
    report.orderings.push_back(std::move(o));
  }

  std::stable_sort(report.verdicts.begin(), report.verdicts.end(),
                   [](const SafetyVerdict& a, const SafetyVerdict& b) {
                     return a.case_id < b.case_id;
                   });
  for (const auto& v : report.verdicts) {
    if (v.status == VerdictStatus::kPass) ++report.passed;
    if (v.status == VerdictStatus::kFail) ++report.failed;
    if (v.status == VerdictStatus::kError) ++report.errors;
    report.blocking_failure |= v.blocking_failure;
  }
  for (const auto& o : report.orderings) report.blocking_failure |= o.blocking_failure;
  return report;
}

std::vector<ErrorAnalysis> AnalyzeErrors(const Model& model, const Dataset& labeled,
                                         double threshold, const Dataset& background,
                                         const Dataset* pool,
                                         const AttributionOptions& options) {
  const auto labels = [&] {
    std::vector<Label> out;
    for (size_t i = 0; i < labeled.size(); ++i) {
      if (!labeled.records[i].label) {
        throw Error(ErrorCode::kInvalidArgument, kModule,
                    "record " + std::to_string(i) + " has no label");
      }
      out.push_back(*labeled.records[i].label);
    }
    return out;
  }();
  std::vector<ErrorAnalysis> entries;
  for (size_t i = 0; i < labeled.size(); ++i) {
    const double p = PredictProba(model, labeled.records[i]);
    const Label predicted = p >= threshold ? Label::kCkd : Label::kNoCkd;
    if (predicted == labels[i]) continue;
    ErrorAnalysis e;
    e.record_id = labeled.records[i].id;
    e.index = i;
    e.truth = labels[i];
    e.prediction = predicted;
    e.probability_ckd = p;
    e.ratio_ckd = p;
    e.ratio_no_ckd = 1.0 - p;
    e.margin = std::abs(p - threshold);
    entries.push_back(std::move(e));
  }
  std::stable_sort(entries.begin(), entries.end(), [](const ErrorAnalysis& a, const ErrorAnalysis& b) {
    const bool a_fn = a.truth == Label::kCkd;
    const bool b_fn = b.truth == Label::kCkd;
    if (a_fn != b_fn) return a_fn;
    return a.record_id < b.record_id;
  });

  const Dataset& candidates = pool != nullptr ? *pool : labeled;
  const DistanceConfig distance_config;
  const DistanceStats stats = DistanceStats::Fit(candidates, distance_config);
  ParallelFor(entries.size(), [&](size_t k) {
    ErrorAnalysis& e = entries[k];
    const auto& values = labeled.records[e.index].values;
    const Attribution attribution = Attribute(model, values, background, options);
    std::vector<size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return std::abs(attribution.phis[a]) > std::abs(attribution.phis[b]);
    });
    for (size_t r = 0; r < std::min<size_t>(5, order.size()); ++r) {
      e.top_attributions.emplace_back(order[r], attribution.phis[order[r]]);
    }
    e.dominant_feature = order.front();
    if (auto pair = FindCounterfactual(values, candidates, model, threshold, distance_config, stats)) {
      e.counterfactual_distance = pair->distance;
    }
    for (size_t f = 0; f < values.size(); ++f) {
      const auto& spec = labeled.schema.spec(f);
      if (!spec.risk_factor) continue;
      (values[f] == 1.0 ? e.present_risk_factors : e.absent_risk_factors).push_back(spec.name);
    }
  });
  return entries;
}

}  // namespace nephroscope
