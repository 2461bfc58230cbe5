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

// Read-only HTTP facade over a loaded model.
//
//   POST /predict         feature map -> probability, class, threshold, digest
//   POST /explain         feature map -> ranked attributions + base value
//   POST /counterfactual  feature map -> nearest opposite-class pool record
//   GET  /pdp?feature=    precomputed partial dependence curve
//   GET  /meta            schema and manifest
//   GET  /health          "ok"
//
// Everything is built once at construction and never mutated afterwards, so
// Handle() may run on any number of threads at once.

#ifndef NEPHROSCOPE_SERVICE_H_
#define NEPHROSCOPE_SERVICE_H_

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nephroscope/dependence.h"
#include "nephroscope/local_explain.h"
#include "nephroscope/model_io.h"
#include "nephroscope/shap.h"

namespace nephroscope {

// Version of the documented response schema (docs/service-schema.json).
inline constexpr int kServiceSchemaVersion = 1;

struct ServiceOptions {
  DistanceConfig distance;
  AttributionOptions attribution;
  size_t pdp_points = 20;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

class Service {
 public:
  // A service with no model: every model endpoint answers 503.
  Service();
  // `pool` holds raw (unscaled, complete) records over the bundle schema; it
  // backs /counterfactual and the PDP curves. Without it, /counterfactual
  // answers 404 and curves are computed over the bundle background.
  Service(ModelBundle bundle, std::optional<Dataset> pool, ServiceOptions options = {});
  ~Service();
  Service(Service&&) noexcept;
  Service& operator=(Service&&) noexcept;

  // Loads model.json and, when given, a pool CSV (missing cells imputed with
  // the default rules).
  static Service Load(const std::filesystem::path& model_path,
                      const std::optional<std::filesystem::path>& pool_path,
                      ServiceOptions options = {});

  bool loaded() const;

  HttpResponse Handle(std::string_view method, std::string_view path,
                      const std::map<std::string, std::string>& query,
                      std::string_view body) const;

 private:
  struct State;
  std::unique_ptr<const State> state_;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8750;  // 0 picks a free port
  // Static assets mounted at "/", e.g. a built UI.
  std::optional<std::filesystem::path> ui_dir;
  double timeout_seconds = 2.0;
};

// Blocking HTTP/1.1 server around a Service.
class HttpServer {
 public:
  HttpServer(const Service& service, ServeOptions options);
  ~HttpServer();

  // Binds the socket; returns the bound port. Throws Error(kIoError).
  int Bind();
  // Serves until Stop(). Bind() must have succeeded.
  void Run();
  void Stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace nephroscope

#endif  // NEPHROSCOPE_SERVICE_H_
