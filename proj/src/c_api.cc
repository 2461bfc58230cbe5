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

#include "nephroscope/nephroscope.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>

#include "json_io.h"
#include "nephroscope/anchors.h"
#include "nephroscope/dataset.h"
#include "nephroscope/dependence.h"
#include "nephroscope/digest.h"
#include "nephroscope/local_explain.h"
#include "nephroscope/model_io.h"
#include "nephroscope/pipeline.h"
#include "nephroscope/report.h"
#include "nephroscope/safety.h"
#include "nephroscope/service.h"
#include "nephroscope/shap.h"
#include "nephroscope/status.h"
#include "nephroscope/synthetic.h"

struct ns_dataset {
  nephroscope::Dataset data;
  nephroscope::ValidationReport validation;
  std::string digest;
};

struct ns_model {
  nephroscope::ModelBundle bundle;
  std::string digest;
};

struct ns_report {
  std::string json;
  std::string text;
  std::vector<std::pair<std::string, std::string>> files;
  bool blocking_failure = false;
};

struct ns_service {
  nephroscope::Service service;
};

struct ns_server {
  std::unique_ptr<nephroscope::HttpServer> server;
};

namespace {

using namespace nephroscope;
using internal::Json;

thread_local std::string g_last_error;

ns_status ToStatus(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return NS_ERR_INVALID_ARGUMENT;
    case ErrorCode::kDataError:
      return NS_ERR_DATA;
    case ErrorCode::kIoError:
      return NS_ERR_IO;
    case ErrorCode::kNotFound:
      return NS_ERR_NOT_FOUND;
    case ErrorCode::kSchemaMismatch:
      return NS_ERR_SCHEMA_MISMATCH;
    case ErrorCode::kDegenerate:
      return NS_ERR_DEGENERATE;
    case ErrorCode::kInternal:
      return NS_ERR_INTERNAL;
  }
  return NS_ERR_INTERNAL;
}

ns_status Fail(ns_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
ns_status Guard(F&& body) {
  try {
    body();
    return NS_OK;
  } catch (const Error& e) {
    return Fail(ToStatus(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return Fail(NS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(NS_ERR_INTERNAL, std::string("internal: ") + e.what());
  }
}

#define NS_REQUIRE(cond, what) \
  if (!(cond)) return Fail(NS_ERR_INVALID_ARGUMENT, std::string("api: ") + (what))

char* CopyString(std::string_view s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

PipelineConfig ConfigFrom(const char* config_json) {
  return config_json == nullptr ? PipelineConfig::Defaults() : PipelineConfig::FromJson(config_json);
}

std::string Dump(const Json& j) { return j.dump(2) + "\n"; }

size_t RequireRow(const Dataset& data, int64_t row) {
  if (row < 0 || static_cast<size_t>(row) >= data.size()) {
    throw Error(ErrorCode::kInvalidArgument, "cli",
                "row " + std::to_string(row) + " out of range [0, " + std::to_string(data.size()) +
                    ")");
  }
  return static_cast<size_t>(row);
}

void ExplainGlobal(const ModelBundle& bundle, const Dataset& prepared, const PipelineConfig& config,
                   ns_report* report) {
  const Dataset background = BackgroundDataset(bundle);
  GlobalSummary summary = ComputeGlobalSummary(bundle.model, prepared, background, config.attribution);
  Json doc = internal::GlobalSummaryJson(summary);
  // Direction of each feature's effect: rank correlation of phi with value.
  Json direction = Json::object();
  for (const auto& feature : summary.features) {
    std::vector<double> phi;
    std::vector<double> value;
    for (const auto& [p, v] : feature.points) {
      phi.push_back(p);
      value.push_back(v);
    }
    const double rho = RankCorrelation(phi, value);
    direction[feature.feature] = std::isnan(rho) ? Json(nullptr) : Json(rho);
  }
  doc["phi_value_rank_correlation"] = direction;
  report->json = Dump(doc);
  report->text = RenderGlobalSummaryText(summary);
  report->files = {{"global_ranking.csv", GlobalSummaryCsv(summary)},
                   {"global_points.csv", GlobalPointsCsv(summary)}};
}

void RunExplain(const ModelBundle& bundle, const Dataset& raw, std::string_view mode, int64_t row,
                const char* feature, const Dataset* pool_raw, const PipelineConfig& config,
                ns_report* report) {
  const Dataset prepared = PrepareForModel(raw, bundle, config);
  const ScalerParams* scaler = &bundle.scaler;
  if (mode == "global") {
    ExplainGlobal(bundle, prepared, config, report);
  } else if (mode == "prototypes") {
    const PrototypeSet set = SelectPrototypes(prepared, bundle.model, bundle.threshold, config.prototypes);
    report->json = RenderPrototypesJson(set, prepared);
    report->text = RenderPrototypesText(set, prepared);
  } else if (mode == "counterfactual") {
    const size_t index = RequireRow(prepared, row);
    const Dataset pool = pool_raw != nullptr ? PrepareForModel(*pool_raw, bundle, config) : prepared;
    const auto pair = FindCounterfactual(prepared.records[index].values, pool, bundle.model,
                                         bundle.threshold, config.prototypes.distance);
    report->json = RenderCounterfactualJson(pair, bundle.schema, scaler);
    report->text = RenderCounterfactualText(pair, bundle.schema, scaler);
  } else if (mode == "pdp") {
    if (feature == nullptr) throw Error(ErrorCode::kInvalidArgument, "cli", "pdp requires a feature");
    const PDCurve curve =
        PartialDependence(bundle.model, prepared, feature, GridSpec::Auto(config.pdp_points));
    report->json = RenderCurveJson(curve);
    report->text = RenderCurveText(curve);
    report->files = {{"pdp_" + curve.feature + ".csv", CurveCsv(curve)}};
  } else if (mode == "anchor") {
    const size_t index = RequireRow(prepared, row);
    const PerturbationSpace space(prepared, config.seed);
    AnchorOptions options = config.anchors;
    options.threshold = bundle.threshold;
    const AnchorRule rule = InduceAnchor(bundle.model, prepared.records[index].values, space, options);
    report->json = RenderAnchorJson(rule, bundle.schema, scaler);
    report->text = RenderAnchorText(rule, bundle.schema, scaler);
  } else if (mode == "errors") {
    const Dataset background = BackgroundDataset(bundle);
    const Dataset pool = pool_raw != nullptr ? PrepareForModel(*pool_raw, bundle, config) : prepared;
    const auto entries = AnalyzeErrors(bundle.model, prepared, bundle.threshold, background, &pool,
                                       config.attribution);
    report->json = RenderErrorAnalysisJson(entries, bundle.schema);
    report->text = RenderErrorAnalysisText(entries, bundle.schema);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "cli", "unknown explain mode '" + std::string(mode) + "'");
  }
}

std::map<std::string, std::string> ParseQuery(const char* query) {
  std::map<std::string, std::string> out;
  if (query == nullptr) return out;
  httplib::Params params;
  httplib::detail::parse_query_text(query, params);
  for (const auto& [key, value] : params) out.emplace(key, value);
  return out;
}

}  // namespace

extern "C" {

const char* ns_version(void) { return kToolVersion; }

const char* ns_status_name(ns_status status) {
  switch (status) {
    case NS_OK:
      return "ok";
    case NS_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
    case NS_ERR_DATA:
      return "data_error";
    case NS_ERR_IO:
      return "io_error";
    case NS_ERR_NOT_FOUND:
      return "not_found";
    case NS_ERR_SCHEMA_MISMATCH:
      return "schema_mismatch";
    case NS_ERR_DEGENERATE:
      return "degenerate";
    case NS_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

const char* ns_last_error(void) { return g_last_error.c_str(); }

void ns_string_free(char* s) { std::free(s); }

ns_status ns_config_default(char** out_json) {
  NS_REQUIRE(out_json != nullptr, "out_json is NULL");
  return Guard([&] { *out_json = CopyString(PipelineConfig::Defaults().ToJson()); });
}

ns_status ns_config_canonical(const char* config_json, char** out_json) {
  NS_REQUIRE(out_json != nullptr, "NULL argument");
  return Guard([&] { *out_json = CopyString(ConfigFrom(config_json).ToJson()); });
}

ns_status ns_dataset_load_csv(const char* path, ns_dataset** out) {
  NS_REQUIRE(path != nullptr && out != nullptr, "NULL argument");
  return Guard([&] {
    const std::string bytes = ReadFileBytes(path);
    ValidationReport validation;
    Dataset data = ParseCsv(bytes, CkdSchema(), &validation);
    *out = new ns_dataset{std::move(data), std::move(validation), Sha256Hex(bytes)};
  });
}

ns_status ns_dataset_generate_synthetic(size_t rows, double prevalence, uint64_t seed,
                                        ns_dataset** out) {
  NS_REQUIRE(out != nullptr, "out is NULL");
  return Guard([&] {
    SyntheticConfig config;
    config.rows = rows;
    config.prevalence = prevalence;
    config.seed = seed;
    SyntheticCohort cohort = GenerateSynthetic(config);
    const std::string digest = Sha256Hex(FormatCsv(cohort.dataset));
    *out = new ns_dataset{std::move(cohort.dataset), {}, digest};
  });
}

ns_status ns_dataset_write_csv(const ns_dataset* dataset, const char* path) {
  NS_REQUIRE(dataset != nullptr && path != nullptr, "NULL argument");
  return Guard([&] { WriteCsv(dataset->data, path); });
}

size_t ns_dataset_size(const ns_dataset* dataset) {
  return dataset == nullptr ? 0 : dataset->data.size();
}

const char* ns_dataset_digest(const ns_dataset* dataset) {
  return dataset == nullptr ? "" : dataset->digest.c_str();
}

ns_status ns_dataset_warnings_json(const ns_dataset* dataset, char** out_json) {
  NS_REQUIRE(dataset != nullptr && out_json != nullptr, "NULL argument");
  return Guard([&] {
    Json warnings = Json::array();
    for (const auto& w : dataset->validation.warnings) {
      warnings.push_back({{"row", w.row}, {"column", w.column}, {"value", w.value}, {"message", w.message}});
    }
    *out_json = CopyString(warnings.dump());
  });
}

void ns_dataset_free(ns_dataset* dataset) { delete dataset; }

ns_status ns_train(const ns_dataset* data, const char* config_json, const char* out_dir,
                   ns_report** out_report) {
  NS_REQUIRE(data != nullptr && out_report != nullptr, "NULL argument");
  return Guard([&] {
    const PipelineConfig config = ConfigFrom(config_json);
    const TrainResult result = RunTraining(data->data, config, data->digest, data->validation);
    if (out_dir != nullptr) WriteTrainingArtifacts(result, out_dir);
    auto report = std::make_unique<ns_report>();
    report->json = RenderTrainingJson(result);
    report->text = RenderTrainingText(result);
    *out_report = report.release();
  });
}

ns_status ns_model_load(const char* path, ns_model** out) {
  NS_REQUIRE(path != nullptr && out != nullptr, "NULL argument");
  return Guard([&] {
    ModelBundle bundle = LoadBundle(path);
    std::string digest = BundleDigest(bundle);
    *out = new ns_model{std::move(bundle), std::move(digest)};
  });
}

void ns_model_free(ns_model* model) { delete model; }

size_t ns_model_feature_count(const ns_model* model) {
  return model == nullptr ? 0 : model->bundle.schema.size();
}

const char* ns_model_feature_name(const ns_model* model, size_t index) {
  if (model == nullptr || index >= model->bundle.schema.size()) return nullptr;
  return model->bundle.schema.spec(index).name.c_str();
}

double ns_model_threshold(const ns_model* model) {
  return model == nullptr ? 0.0 : model->bundle.threshold;
}

const char* ns_model_digest(const ns_model* model) {
  return model == nullptr ? "" : model->digest.c_str();
}

ns_status ns_model_predict(const ns_model* model, const double* raw_values, size_t n,
                           double* out_probability) {
  NS_REQUIRE(model != nullptr && raw_values != nullptr && out_probability != nullptr,
             "NULL argument");
  return Guard([&] {
    const auto& bundle = model->bundle;
    if (n != bundle.schema.size()) {
      throw Error(ErrorCode::kSchemaMismatch, "api",
                  "expected " + std::to_string(bundle.schema.size()) + " values, got " +
                      std::to_string(n));
    }
    for (size_t f = 0; f < n; ++f) {
      if (auto problem = ValidateValue(bundle.schema.spec(f), raw_values[f], nullptr)) {
        throw Error(ErrorCode::kInvalidArgument, "api", *problem);
      }
    }
    PatientRecord record;
    record.values = bundle.scaler.ScaleRow(std::span<const double>(raw_values, n));
    *out_probability = PredictProba(bundle.model, record);
  });
}

ns_status ns_explain(const ns_model* model, const ns_dataset* data, const char* mode, int64_t row,
                     const char* feature, const ns_dataset* pool, const char* config_json,
                     ns_report** out_report) {
  NS_REQUIRE(model != nullptr && data != nullptr && mode != nullptr && out_report != nullptr,
             "NULL argument");
  return Guard([&] {
    const PipelineConfig config = ConfigFrom(config_json);
    auto report = std::make_unique<ns_report>();
    RunExplain(model->bundle, data->data, mode, row, feature, pool ? &pool->data : nullptr, config,
               report.get());
    *out_report = report.release();
  });
}

ns_status ns_evaluate(const ns_model* model, const ns_dataset* data, const char* config_json,
                      ns_report** out_report) {
  NS_REQUIRE(model != nullptr && data != nullptr && out_report != nullptr, "NULL argument");
  return Guard([&] {
    const PipelineConfig config = ConfigFrom(config_json);
    const ModelBundle& bundle = model->bundle;
    Dataset prepared = PrepareForModel(data->data, bundle, config);
    Dataset labeled = prepared.EmptyLike();
    for (const auto& record : prepared.records) {
      if (record.label) labeled.records.push_back(record);
    }
    if (labeled.empty()) throw Error(ErrorCode::kDataError, "cli", "no labeled records to evaluate");
    const EvalMetrics metrics =
        Evaluate(PredictAll(bundle.model, labeled), LabelsOf(labeled), bundle.threshold);
    const Dataset background = BackgroundDataset(bundle);
    const auto errors =
        AnalyzeErrors(bundle.model, labeled, bundle.threshold, background, &labeled, config.attribution);
    Json doc = {{"model_digest", model->digest},
                {"champion", bundle.champion},
                {"records", labeled.size()},
                {"metrics", internal::MetricsJson(metrics)},
                {"errors", internal::ErrorAnalysisJson(errors, bundle.schema)}};
    auto report = std::make_unique<ns_report>();
    report->json = Dump(doc);
    char line[256];
    std::snprintf(line, sizeof(line),
                  "Evaluation of %s on %zu records at threshold %.4f\n"
                  "  sensitivity %.4f  specificity %.4f  rocauc %.4f  (tp %zu fp %zu tn %zu fn %zu)\n\n",
                  bundle.champion.c_str(), labeled.size(), bundle.threshold, metrics.sensitivity,
                  metrics.specificity, metrics.rocauc, metrics.counts.tp, metrics.counts.fp,
                  metrics.counts.tn, metrics.counts.fn);
    report->text = line + RenderErrorAnalysisText(errors, bundle.schema);
    *out_report = report.release();
  });
}

ns_status ns_safety_run(const ns_model* model, const char* suite_yaml, ns_report** out_report) {
  NS_REQUIRE(model != nullptr && out_report != nullptr, "NULL argument");
  return Guard([&] {
    const SafetySuite suite = suite_yaml == nullptr ? BundledSuite() : ParseSuite(suite_yaml);
    const auto& b = model->bundle;
    const SafetyReport result = RunSuite(suite, b.model, b.scaler, b.schema, b.threshold);
    auto report = std::make_unique<ns_report>();
    report->json = RenderSafetyJson(result);
    report->text = RenderSafetyText(result);
    report->blocking_failure = result.blocking_failure;
    *out_report = report.release();
  });
}

const char* ns_bundled_suite_yaml(void) { return BundledSuiteYaml().data(); }

const char* ns_report_json(const ns_report* report) {
  return report == nullptr ? "" : report->json.c_str();
}

const char* ns_report_text(const ns_report* report) {
  return report == nullptr ? "" : report->text.c_str();
}

size_t ns_report_file_count(const ns_report* report) {
  return report == nullptr ? 0 : report->files.size();
}

const char* ns_report_file_name(const ns_report* report, size_t index) {
  if (report == nullptr || index >= report->files.size()) return nullptr;
  return report->files[index].first.c_str();
}

const char* ns_report_file_content(const ns_report* report, size_t index) {
  if (report == nullptr || index >= report->files.size()) return nullptr;
  return report->files[index].second.c_str();
}

int ns_report_blocking_failure(const ns_report* report) {
  return report != nullptr && report->blocking_failure ? 1 : 0;
}

ns_status ns_report_write_files(const ns_report* report, const char* dir) {
  NS_REQUIRE(report != nullptr && dir != nullptr, "NULL argument");
  return Guard([&] {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
      throw Error(ErrorCode::kIoError, "cli",
                  "cannot create output directory '" + std::string(dir) + "': " + ec.message());
    }
    for (const auto& [name, content] : report->files) {
      WriteFileAtomic(std::filesystem::path(dir) / name, content);
    }
  });
}

void ns_report_free(ns_report* report) { delete report; }

ns_status ns_service_create(const char* model_path, const char* pool_path, const char* config_json,
                            ns_service** out) {
  NS_REQUIRE(model_path != nullptr && out != nullptr, "NULL argument");
  return Guard([&] {
    const PipelineConfig config = ConfigFrom(config_json);
    ServiceOptions options;
    options.distance = config.prototypes.distance;
    options.attribution = config.attribution;
    options.pdp_points = config.pdp_points;
    std::optional<std::filesystem::path> pool;
    if (pool_path != nullptr) pool = pool_path;
    *out = new ns_service{Service::Load(model_path, pool, options)};
  });
}

ns_status ns_service_create_unloaded(ns_service** out) {
  NS_REQUIRE(out != nullptr, "out is NULL");
  return Guard([&] { *out = new ns_service{Service()}; });
}

void ns_service_free(ns_service* service) { delete service; }

ns_status ns_service_handle(const ns_service* service, const char* method, const char* path,
                            const char* query, const char* body, int* out_status, char** out_body) {
  NS_REQUIRE(service != nullptr && method != nullptr && path != nullptr && out_status != nullptr &&
                 out_body != nullptr,
             "NULL argument");
  return Guard([&] {
    const HttpResponse response =
        service->service.Handle(method, path, ParseQuery(query), body == nullptr ? "" : body);
    *out_status = response.status;
    *out_body = CopyString(response.body);
  });
}

ns_status ns_server_create(const ns_service* service, const char* host, int port,
                           const char* ui_dir, double timeout_seconds, ns_server** out) {
  NS_REQUIRE(service != nullptr && out != nullptr, "NULL argument");
  NS_REQUIRE(port >= 0 && port <= 65535, "port out of range");
  NS_REQUIRE(timeout_seconds > 0, "timeout must be positive");
  return Guard([&] {
    ServeOptions options;
    if (host != nullptr) options.host = host;
    options.port = port;
    if (ui_dir != nullptr) options.ui_dir = ui_dir;
    options.timeout_seconds = timeout_seconds;
    *out = new ns_server{std::make_unique<HttpServer>(service->service, options)};
  });
}

ns_status ns_server_bind(ns_server* server, int* out_port) {
  NS_REQUIRE(server != nullptr, "server is NULL");
  return Guard([&] {
    const int port = server->server->Bind();
    if (out_port != nullptr) *out_port = port;
  });
}

ns_status ns_server_run(ns_server* server) {
  NS_REQUIRE(server != nullptr, "server is NULL");
  return Guard([&] { server->server->Run(); });
}

void ns_server_stop(ns_server* server) {
  if (server != nullptr) server->server->Stop();
}

void ns_server_free(ns_server* server) { delete server; }

}  // extern "C"
