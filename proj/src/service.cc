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

#include "nephroscope/service.h"

#include <chrono>
#include <cmath>
#include <utility>
#include <variant>

#include <httplib.h>

#include "csv.h"
#include "json_io.h"
#include "nephroscope/pipeline.h"
#include "nephroscope/status.h"

namespace nephroscope {
namespace {

using internal::Json;

constexpr char kModule[] = "service";

HttpResponse JsonResponse(int status, const Json& body) {
  return {status, body.dump(), "application/json"};
}

HttpResponse ErrorResponse(int status, std::string_view message,
                           std::optional<std::string> field = std::nullopt) {
  Json body = {{"error", message}};
  if (field) body["field"] = *field;
  return JsonResponse(status, body);
}

struct ParsedRequest {
  std::vector<double> raw;
  std::vector<std::string> warnings;
};

// Either a parsed feature map or a 400 response naming the field.
std::variant<ParsedRequest, HttpResponse> ParseFeatureMap(std::string_view body,
                                                          const FeatureSchema& schema) {
  Json doc = Json::parse(body, nullptr, false);
  if (doc.is_discarded()) return ErrorResponse(400, "request body is not valid JSON");
  // {"features": {...}} is accepted as well as a bare map.
  if (doc.is_object() && doc.contains("features") && doc.size() == 1) doc = doc["features"];
  if (!doc.is_object()) return ErrorResponse(400, "request body must be a JSON object");

  ParsedRequest out;
  out.raw.assign(schema.size(), kMissing);
  for (const auto& [key, value] : doc.items()) {
    const auto index = schema.IndexOf(key);
    if (!index) return ErrorResponse(400, "unknown feature '" + key + "'", key);
    const FeatureSpec& spec = schema.spec(*index);
    std::optional<double> parsed;
    if (value.is_number()) {
      parsed = value.get<double>();
    } else if (value.is_boolean()) {
      parsed = value.get<bool>() ? 1.0 : 0.0;
    } else if (value.is_string()) {
      const auto text = value.get<std::string>();
      parsed = spec.is_binary() ? internal::ParseBinary(text) : internal::ParseNumber(text);
    }
    if (!parsed) {
      return ErrorResponse(400, "value for '" + spec.name + "' must be a number", spec.name);
    }
    std::string warning;
    if (auto problem = ValidateValue(spec, *parsed, &warning)) {
      return ErrorResponse(400, *problem, spec.name);
    }
    if (!warning.empty()) out.warnings.push_back(warning);
    out.raw[*index] = *parsed;
  }
  for (size_t f = 0; f < schema.size(); ++f) {
    if (IsMissing(out.raw[f])) {
      return ErrorResponse(400, "missing feature '" + schema.spec(f).name + "'",
                           schema.spec(f).name);
    }
  }
  return out;
}

}  // namespace

struct Service::State {
  ModelBundle bundle;
  std::string model_digest;
  Dataset background;
  std::optional<Dataset> pool;  // scaled
  std::optional<DistanceStats> stats;
  ServiceOptions options;
  std::vector<PDCurve> curves;
  std::string meta;

  explicit State(ModelBundle b) : bundle(std::move(b)), background(BackgroundDataset(bundle)) {}

  // Scaled instance plus warnings, or an error response.
  std::variant<ParsedRequest, HttpResponse> Prepare(std::string_view body) const {
    auto parsed = ParseFeatureMap(body, bundle.schema);
    if (auto* request = std::get_if<ParsedRequest>(&parsed)) {
      request->raw = bundle.scaler.ScaleRow(request->raw);
    }
    return parsed;
  }

  Json PredictionJson(double p) const {
    return {{"probability", p},
            {"class", LabelName(p >= bundle.threshold ? Label::kCkd : Label::kNoCkd)},
            {"threshold", bundle.threshold},
            {"model_digest", model_digest}};
  }

  HttpResponse Finish(Json body, const std::vector<std::string>& warnings) const {
    body["warnings"] = warnings;
    return JsonResponse(warnings.empty() ? 200 : 422, body);
  }

  HttpResponse Predict(std::string_view body) const {
    auto prepared = Prepare(body);
    if (auto* error = std::get_if<HttpResponse>(&prepared)) return *error;
    const auto& request = std::get<ParsedRequest>(prepared);
    return Finish(PredictionJson(bundle.model.Predict(request.raw)), request.warnings);
  }

  HttpResponse Explain(std::string_view body) const {
    auto prepared = Prepare(body);
    if (auto* error = std::get_if<HttpResponse>(&prepared)) return *error;
    const auto& request = std::get<ParsedRequest>(prepared);
    const Attribution a = Attribute(bundle.model, request.raw, background, options.attribution);
    Json out = internal::AttributionJson(a, bundle.schema, &bundle.scaler);
    out["class"] = LabelName(a.prediction >= bundle.threshold ? Label::kCkd : Label::kNoCkd);
    out["threshold"] = bundle.threshold;
    out["model_digest"] = model_digest;
    return Finish(std::move(out), request.warnings);
  }

  HttpResponse Counterfactual(std::string_view body) const {
    auto prepared = Prepare(body);
    if (auto* error = std::get_if<HttpResponse>(&prepared)) return *error;
    const auto& request = std::get<ParsedRequest>(prepared);
    if (!pool) {
      return JsonResponse(404, {{"found", false}, {"message", "no counterfactual pool loaded"}});
    }
    const auto pair = FindCounterfactual(request.raw, *pool, bundle.model, bundle.threshold,
                                         options.distance, *stats);
    if (!pair) {
      return JsonResponse(
          404, {{"found", false}, {"message", "no pool record has the opposite prediction"}});
    }
    Json out = internal::CounterfactualJson(*pair, bundle.schema, &bundle.scaler);
    out["model_digest"] = model_digest;
    return Finish(std::move(out), request.warnings);
  }

  HttpResponse Pdp(const std::map<std::string, std::string>& query) const {
    const auto it = query.find("feature");
    if (it == query.end()) return ErrorResponse(400, "missing query parameter 'feature'", "feature");
    const auto index = bundle.schema.IndexOf(it->second);
    if (!index) return ErrorResponse(404, "unknown feature '" + it->second + "'", "feature");
    return JsonResponse(200, internal::CurveJson(curves[*index]));
  }
};

Service::Service() = default;
Service::~Service() = default;
Service::Service(Service&&) noexcept = default;
Service& Service::operator=(Service&&) noexcept = default;

Service::Service(ModelBundle bundle, std::optional<Dataset> pool, ServiceOptions options) {
  auto state = std::make_unique<State>(std::move(bundle));
  state->options = options;
  state->model_digest = BundleDigest(state->bundle);
  const FeatureSchema& schema = state->bundle.schema;
  if (pool) {
    if (!(pool->schema == schema)) {
      throw Error(ErrorCode::kSchemaMismatch, kModule, "pool schema differs from the model schema");
    }
    for (const auto& record : pool->records) {
      for (double v : record.values) {
        if (IsMissing(v)) throw Error(ErrorCode::kDataError, kModule, "pool has missing values");
      }
    }
    state->pool = ApplyScaler(*pool, state->bundle.scaler);
    state->stats = DistanceStats::Fit(*state->pool, options.distance);
  }
  const Dataset& curve_data = state->pool ? *state->pool : state->background;
  for (size_t f = 0; f < schema.size(); ++f) {
    state->curves.push_back(PartialDependence(state->bundle.model, curve_data, schema.spec(f).name,
                                              GridSpec::Auto(options.pdp_points)));
  }
  const ModelBundle& b = state->bundle;
  Json meta = {{"service_schema_version", kServiceSchemaVersion},
               {"tool_version", kToolVersion},
               {"schema", internal::SchemaJson(schema)},
               {"manifest",
                {{"model_digest", state->model_digest},
                 {"manifest_digest", b.manifest_digest},
                 {"champion", b.champion},
                 {"model_kind", ModelKindName(b.model.kind())},
                 {"threshold", b.threshold},
                 {"threshold_policy", b.threshold_policy}}},
               {"background_size", b.background.size()},
               {"pool_size", state->pool ? Json(state->pool->size()) : Json(nullptr)},
               {"distance",
                {{"numeric_scale", NumericScaleName(options.distance.numeric_scale)},
                 {"categorical_mismatch_cost", options.distance.categorical_mismatch_cost},
                 {"norm", DistanceNormName(options.distance.norm)}}}};
  state->meta = meta.dump();
  state_ = std::move(state);
}

Service Service::Load(const std::filesystem::path& model_path,
                      const std::optional<std::filesystem::path>& pool_path,
                      ServiceOptions options) {
  ModelBundle bundle = LoadBundle(model_path);
  std::optional<Dataset> pool;
  if (pool_path) {
    Dataset raw = LoadCsv(*pool_path, bundle.schema);
    pool = ImputeGroupMean(raw, DefaultImputationRules(bundle.schema));
  }
  return Service(std::move(bundle), std::move(pool), options);
}

bool Service::loaded() const { return state_ != nullptr; }

HttpResponse Service::Handle(std::string_view method, std::string_view path,
                             const std::map<std::string, std::string>& query,
                             std::string_view body) const {
  struct Route {
    std::string_view method;
    std::string_view path;
  };
  static constexpr Route kRoutes[] = {{"POST", "/predict"}, {"POST", "/explain"},
                                      {"POST", "/counterfactual"}, {"GET", "/pdp"},
                                      {"GET", "/meta"},     {"GET", "/health"}};
  bool path_known = false;
  bool method_ok = false;
  for (const auto& route : kRoutes) {
    if (route.path == path) {
      path_known = true;
      method_ok = method_ok || route.method == method;
    }
  }
  if (!path_known) return ErrorResponse(404, "no such endpoint");
  if (!method_ok) return ErrorResponse(405, "method not allowed");
  if (!state_) return ErrorResponse(503, "model not loaded");
  try {
    if (path == "/health") return {200, "ok", "text/plain"};
    if (path == "/meta") return {200, state_->meta, "application/json"};
    if (path == "/predict") return state_->Predict(body);
    if (path == "/explain") return state_->Explain(body);
    if (path == "/counterfactual") return state_->Counterfactual(body);
    return state_->Pdp(query);
  } catch (const Error& e) {
    return ErrorResponse(e.code() == ErrorCode::kInvalidArgument ? 400 : 500, e.what());
  } catch (const std::exception& e) {
    return ErrorResponse(500, std::string(kModule) + ": " + e.what());
  }
}

struct HttpServer::Impl {
  const Service& service;
  ServeOptions options;
  httplib::Server server;
  // Stop() may race with Run(); a stop that arrives first must still win.
  std::mutex mu;
  bool stop_requested = false;
  bool running = false;
  Impl(const Service& s, ServeOptions o) : service(s), options(std::move(o)) {}
};

HttpServer::HttpServer(const Service& service, ServeOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  auto& server = impl_->server;
  const auto seconds = static_cast<time_t>(impl_->options.timeout_seconds);
  const auto micros = static_cast<time_t>(
      std::llround((impl_->options.timeout_seconds - static_cast<double>(seconds)) * 1e6));
  server.set_read_timeout(seconds, micros);
  server.set_write_timeout(seconds, micros);
  server.set_payload_max_length(1 << 20);
  if (impl_->options.ui_dir && !server.set_mount_point("/", impl_->options.ui_dir->string())) {
    throw Error(ErrorCode::kNotFound, kModule,
                "ui directory not found: " + impl_->options.ui_dir->string());
  }
  const Service* svc = &service;
  auto handler = [svc](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [key, value] : req.params) query.emplace(key, value);
    const HttpResponse out = svc->Handle(req.method, req.path, query, req.body);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  for (const char* path : {"/predict", "/explain", "/counterfactual", "/pdp", "/meta", "/health"}) {
    server.Get(path, handler);
    server.Post(path, handler);
  }
}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Bind() {
  auto& server = impl_->server;
  if (impl_->options.port == 0) {
    port_ = server.bind_to_any_port(impl_->options.host);
  } else {
    port_ = server.bind_to_port(impl_->options.host, impl_->options.port) ? impl_->options.port
                                                                          : -1;
  }
  if (port_ < 0) {
    throw Error(ErrorCode::kIoError, kModule,
                "cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  }
  return port_;
}

void HttpServer::Run() {
  {
    std::lock_guard<std::mutex> lock(impl_->mu);
    if (impl_->stop_requested) return;
    impl_->running = true;
  }
  impl_->server.listen_after_bind();
}

void HttpServer::Stop() {
  if (!impl_) return;
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->stop_requested = true;
  if (impl_->running) {
    impl_->server.wait_until_ready();
    impl_->server.stop();
  }
}

}  // namespace nephroscope
