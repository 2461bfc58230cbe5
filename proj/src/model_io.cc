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

#include "nephroscope/model_io.h"

#include <json.hpp>

#include "nephroscope/digest.h"
#include "nephroscope/status.h"

namespace nephroscope {
namespace {

using nlohmann::json;

constexpr char kModule[] = "learners";
constexpr char kFormat[] = "nephroscope-model";

json TreeToJson(const DecisionTree& tree) {
  json feature = json::array();
  json threshold = json::array();
  json left = json::array();
  json right = json::array();
  json value = json::array();
  json negative = json::array();
  json positive = json::array();
  for (const auto& node : tree.nodes) {
    feature.push_back(node.feature);
    threshold.push_back(node.threshold);
    left.push_back(node.left);
    right.push_back(node.right);
    value.push_back(node.value);
    negative.push_back(node.negative_count);
    positive.push_back(node.positive_count);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"value", value},         {"negative_count", negative},
          {"positive_count", positive}};
}

DecisionTree TreeFromJson(const json& j, size_t feature_count) {
  DecisionTree tree;
  const auto& feature = j.at("feature");
  const size_t n = feature.size();
  for (const char* key : {"threshold", "left", "right", "value", "negative_count",
                          "positive_count"}) {
    if (j.at(key).size() != n) {
      throw Error(ErrorCode::kDataError, kModule, std::string("tree array '") + key +
                                                      "' has inconsistent length");
    }
  }
  tree.nodes.resize(n);
  for (size_t i = 0; i < n; ++i) {
    TreeNode& node = tree.nodes[i];
    node.feature = feature[i].get<int32_t>();
    node.threshold = j["threshold"][i].get<double>();
    node.left = j["left"][i].get<int32_t>();
    node.right = j["right"][i].get<int32_t>();
    node.value = j["value"][i].get<double>();
    node.negative_count = j["negative_count"][i].get<double>();
    node.positive_count = j["positive_count"][i].get<double>();
    if (!node.is_leaf()) {
      const auto in_range = [&](int32_t child) {
        return child > static_cast<int32_t>(i) && child < static_cast<int32_t>(n);
      };
      if (node.feature >= static_cast<int32_t>(feature_count) || !in_range(node.left) ||
          !in_range(node.right)) {
        throw Error(ErrorCode::kDataError, kModule,
                    "corrupt tree node " + std::to_string(i));
      }
    }
  }
  if (n == 0) throw Error(ErrorCode::kDataError, kModule, "empty tree");
  return tree;
}

json ParamsToJson(const LearnerParams& params) {
  json out = json::object();
  for (const auto& name : LearnerParams::Names()) out[name] = params.Get(name);
  return out;
}

LearnerParams ParamsFromJson(const json& j) {
  LearnerParams params;
  for (const auto& [name, value] : j.items()) params.Set(name, value.get<double>());
  return params;
}

json SchemaToJson(const FeatureSchema& schema) {
  json features = json::array();
  for (const auto& spec : schema.specs()) {
    json f = {{"name", spec.name},
              {"kind", spec.is_binary() ? "binary" : "numeric"},
              {"unit", spec.unit},
              {"missing_allowed", spec.missing_allowed},
              {"risk_factor", spec.risk_factor}};
    if (spec.allowed_range) {
      f["allowed_range"] = {spec.allowed_range->lo, spec.allowed_range->hi};
    }
    features.push_back(f);
  }
  return {{"target", schema.target_name()}, {"features", features}, {"hash", schema.Hash()}};
}

FeatureSchema SchemaFromJson(const json& j) {
  std::vector<FeatureSpec> specs;
  for (const auto& f : j.at("features")) {
    FeatureSpec spec;
    spec.name = f.at("name").get<std::string>();
    const auto kind = f.at("kind").get<std::string>();
    if (kind != "binary" && kind != "numeric") {
      throw Error(ErrorCode::kDataError, kModule, "unknown feature kind '" + kind + "'");
    }
    spec.kind = kind == "binary" ? FeatureKind::kBinary : FeatureKind::kNumeric;
    spec.unit = f.value("unit", "");
    spec.missing_allowed = f.value("missing_allowed", false);
    spec.risk_factor = f.value("risk_factor", false);
    if (f.contains("allowed_range")) {
      spec.allowed_range = ValueRange{f["allowed_range"].at(0).get<double>(),
                                      f["allowed_range"].at(1).get<double>()};
    }
    specs.push_back(std::move(spec));
  }
  FeatureSchema schema(std::move(specs), j.at("target").get<std::string>());
  if (schema.Hash() != j.at("hash").get<std::string>()) {
    throw Error(ErrorCode::kSchemaMismatch, kModule, "schema hash does not match its features");
  }
  return schema;
}

json ModelToJson(const Model& model) {
  json out = {{"kind", ModelKindName(model.kind())}, {"feature_count", model.feature_count()}};
  if (const auto* forest = model.forest()) {
    out["params"] = ParamsToJson(forest->params);
    out["seed"] = forest->seed;
    out["oob_available"] = forest->oob_available;
    json trees = json::array();
    for (const auto& tree : forest->trees) trees.push_back(TreeToJson(tree));
    out["trees"] = trees;
  } else if (const auto* logistic = model.logistic()) {
    out["weights"] = logistic->weights;
    out["intercept"] = logistic->intercept;
    out["l2"] = logistic->l2;
  } else if (const auto* boosted = model.boosted()) {
    out["learning_rate"] = boosted->learning_rate;
    out["base_score"] = boosted->base_score;
    json trees = json::array();
    for (const auto& tree : boosted->trees) trees.push_back(TreeToJson(tree));
    out["trees"] = trees;
  }
  return out;
}

Model ModelFromJson(const json& j) {
  const auto kind_name = j.at("kind").get<std::string>();
  const auto kind = ParseModelKind(kind_name);
  if (!kind) throw Error(ErrorCode::kDataError, kModule, "unknown model kind '" + kind_name + "'");
  const auto feature_count = j.at("feature_count").get<size_t>();
  switch (*kind) {
    case ModelKind::kTree:
    case ModelKind::kForest: {
      ForestModel forest;
      forest.params = ParamsFromJson(j.at("params"));
      forest.seed = j.at("seed").get<uint64_t>();
      forest.oob_available = j.at("oob_available").get<bool>();
      for (const auto& t : j.at("trees")) forest.trees.push_back(TreeFromJson(t, feature_count));
      if (forest.trees.empty()) throw Error(ErrorCode::kDataError, kModule, "forest has no trees");
      return Model(*kind, feature_count, std::move(forest));
    }
    case ModelKind::kLogistic: {
      LogisticModel logistic;
      logistic.weights = j.at("weights").get<std::vector<double>>();
      logistic.intercept = j.at("intercept").get<double>();
      logistic.l2 = j.at("l2").get<double>();
      if (logistic.weights.size() != feature_count) {
        throw Error(ErrorCode::kDataError, kModule, "weight count does not match features");
      }
      return Model(*kind, feature_count, std::move(logistic));
    }
    case ModelKind::kBoosted: {
      BoostedModel boosted;
      boosted.learning_rate = j.at("learning_rate").get<double>();
      boosted.base_score = j.at("base_score").get<double>();
      for (const auto& t : j.at("trees")) boosted.trees.push_back(TreeFromJson(t, feature_count));
      return Model(*kind, feature_count, std::move(boosted));
    }
  }
  throw Error(ErrorCode::kInternal, kModule, "unreachable");
}

}  // namespace

std::string SerializeBundle(const ModelBundle& bundle) {
  json scaler = {{"min", bundle.scaler.min},
                 {"max", bundle.scaler.max},
                 {"scaled", bundle.scaler.scaled},
                 {"schema_hash", bundle.scaler.schema_hash}};
  json doc = {{"format", kFormat},
              {"version", kModelFormatVersion},
              {"schema", SchemaToJson(bundle.schema)},
              {"scaler", scaler},
              {"model", ModelToJson(bundle.model)},
              {"threshold", bundle.threshold},
              {"threshold_policy", bundle.threshold_policy},
              {"background", bundle.background},
              {"champion", bundle.champion},
              {"manifest_digest", bundle.manifest_digest}};
  return doc.dump() + "\n";
}

ModelBundle DeserializeBundle(std::string_view text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != kFormat) {
      throw Error(ErrorCode::kDataError, kModule, "not a nephroscope model file");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorCode::kDataError, kModule,
                  "unsupported model format version " + std::to_string(version));
    }
    FeatureSchema schema = SchemaFromJson(doc.at("schema"));
    ScalerParams scaler;
    scaler.min = doc["scaler"].at("min").get<std::vector<double>>();
    scaler.max = doc["scaler"].at("max").get<std::vector<double>>();
    scaler.scaled = doc["scaler"].at("scaled").get<std::vector<bool>>();
    scaler.schema_hash = doc["scaler"].at("schema_hash").get<std::string>();
    if (scaler.schema_hash != schema.Hash() || scaler.min.size() != schema.size() ||
        scaler.max.size() != schema.size() || scaler.scaled.size() != schema.size()) {
      throw Error(ErrorCode::kSchemaMismatch, kModule, "scaler does not match the schema");
    }
    Model model = ModelFromJson(doc.at("model"));
    if (model.feature_count() != schema.size()) {
      throw Error(ErrorCode::kSchemaMismatch, kModule, "model width does not match the schema");
    }
    ModelBundle bundle{std::move(schema),
                       std::move(scaler),
                       std::move(model),
                       doc.at("threshold").get<double>(),
                       doc.at("threshold_policy").get<std::string>(),
                       doc.at("background").get<std::vector<std::vector<double>>>(),
                       doc.at("champion").get<std::string>(),
                       doc.at("manifest_digest").get<std::string>()};
    for (const auto& row : bundle.background) {
      if (row.size() != bundle.schema.size()) {
        throw Error(ErrorCode::kSchemaMismatch, kModule, "background row width mismatch");
      }
    }
    return bundle;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDataError, kModule, std::string("malformed model file: ") + e.what());
  }
}

void SaveBundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeBundle(bundle));
}

ModelBundle LoadBundle(const std::filesystem::path& path) {
  return DeserializeBundle(ReadFileBytes(path));
}

std::string BundleDigest(const ModelBundle& bundle) {
  return Sha256Hex(SerializeBundle(bundle));
}

Dataset BackgroundDataset(const ModelBundle& bundle) {
  Dataset out(bundle.schema);
  out.scaler = bundle.scaler;
  out.provenance = Provenance::kScaled;
  for (size_t i = 0; i < bundle.background.size(); ++i) {
    PatientRecord record;
    record.values = bundle.background[i];
    record.id = static_cast<int64_t>(i);
    out.records.push_back(std::move(record));
  }
  return out;
}

}  // namespace nephroscope
