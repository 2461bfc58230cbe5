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

/*
 * C interface to libnephroscope.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every fallible call returns an ns_status; on failure a module-qualified
 * message is available from ns_last_error() on the calling thread until the
 * next failing call on that thread. Strings returned through char** out
 * parameters are owned by the caller and released with ns_string_free().
 * Strings returned directly (const char*) belong to the handle.
 *
 * Configuration is passed as the JSON document accepted by
 * `nephroscope train --config`; NULL means the built-in defaults.
 */

#ifndef NEPHROSCOPE_NEPHROSCOPE_H_
#define NEPHROSCOPE_NEPHROSCOPE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(NEPHROSCOPE_BUILDING_LIBRARY)
#define NS_API __attribute__((visibility("default")))
#else
#define NS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ns_status {
  NS_OK = 0,
  NS_ERR_INVALID_ARGUMENT = 1,
  NS_ERR_DATA = 2,
  NS_ERR_IO = 3,
  NS_ERR_NOT_FOUND = 4,
  NS_ERR_SCHEMA_MISMATCH = 5,
  NS_ERR_DEGENERATE = 6,
  NS_ERR_INTERNAL = 7,
} ns_status;

typedef struct ns_dataset ns_dataset;
typedef struct ns_model ns_model;
typedef struct ns_report ns_report;
typedef struct ns_service ns_service;
typedef struct ns_server ns_server;

NS_API const char* ns_version(void);
NS_API const char* ns_status_name(ns_status status);
NS_API const char* ns_last_error(void);
NS_API void ns_string_free(char* s);

/* Canonical JSON of the default configuration, every key spelled out. */
NS_API ns_status ns_config_default(char** out_json);
/* Parses, validates and re-emits a configuration in canonical form. */
NS_API ns_status ns_config_canonical(const char* config_json, char** out_json);

/* ---- datasets ---------------------------------------------------------- */

/* Raw CSV over the canonical CKD schema. Out-of-range values are kept and
 * reported through ns_dataset_warnings_json(). */
NS_API ns_status ns_dataset_load_csv(const char* path, ns_dataset** out);
NS_API ns_status ns_dataset_generate_synthetic(size_t rows, double prevalence, uint64_t seed,
                                               ns_dataset** out);
NS_API ns_status ns_dataset_write_csv(const ns_dataset* dataset, const char* path);
NS_API size_t ns_dataset_size(const ns_dataset* dataset);
/* SHA-256 of the source bytes (CSV file, or the rendered CSV for synthetic
 * data). */
NS_API const char* ns_dataset_digest(const ns_dataset* dataset);
NS_API ns_status ns_dataset_warnings_json(const ns_dataset* dataset, char** out_json);
NS_API void ns_dataset_free(ns_dataset* dataset);

/* ---- training ----------------------------------------------------------- */

/* Runs the full training pipeline. When out_dir is non-NULL, writes
 * model.json, metrics.json, metrics.txt and pool.csv there. The report holds
 * the metrics document (JSON) and table (text). */
NS_API ns_status ns_train(const ns_dataset* data, const char* config_json, const char* out_dir,
                          ns_report** out_report);

/* ---- models ------------------------------------------------------------- */

NS_API ns_status ns_model_load(const char* path, ns_model** out);
NS_API void ns_model_free(ns_model* model);
NS_API size_t ns_model_feature_count(const ns_model* model);
NS_API const char* ns_model_feature_name(const ns_model* model, size_t index);
NS_API double ns_model_threshold(const ns_model* model);
/* SHA-256 of the serialized model. */
NS_API const char* ns_model_digest(const ns_model* model);
/* Probability of CKD for one complete record in raw units, schema order. */
NS_API ns_status ns_model_predict(const ns_model* model, const double* raw_values, size_t n,
                                  double* out_probability);

/* ---- explanations and reports ------------------------------------------ */

/* mode: "global", "prototypes", "counterfactual", "pdp", "anchor" or
 * "errors". `row` is the 0-based data row for counterfactual and anchor;
 * `feature` names the PDP feature. `pool` (nullable) supplies counterfactual
 * candidates; by default the data itself is the pool. */
NS_API ns_status ns_explain(const ns_model* model, const ns_dataset* data, const char* mode,
                            int64_t row, const char* feature, const ns_dataset* pool,
                            const char* config_json, ns_report** out_report);

/* Test-set style evaluation of the model on labeled data at its operating
 * threshold, followed by the misprediction analysis. */
NS_API ns_status ns_evaluate(const ns_model* model, const ns_dataset* data,
                             const char* config_json, ns_report** out_report);

/* suite_yaml NULL runs the bundled edge-case suite. */
NS_API ns_status ns_safety_run(const ns_model* model, const char* suite_yaml,
                               ns_report** out_report);
NS_API const char* ns_bundled_suite_yaml(void);

NS_API const char* ns_report_json(const ns_report* report);
NS_API const char* ns_report_text(const ns_report* report);
/* Tabular exports (CSV) that accompany the report. */
NS_API size_t ns_report_file_count(const ns_report* report);
NS_API const char* ns_report_file_name(const ns_report* report, size_t index);
NS_API const char* ns_report_file_content(const ns_report* report, size_t index);
/* 1 when a safety report contains a blocking failure. */
NS_API int ns_report_blocking_failure(const ns_report* report);
/* Writes every file of the report into dir (created if needed). */
NS_API ns_status ns_report_write_files(const ns_report* report, const char* dir);
NS_API void ns_report_free(ns_report* report);

/* ---- service ------------------------------------------------------------ */

/* pool_path may be NULL (counterfactual endpoint then answers 404). */
NS_API ns_status ns_service_create(const char* model_path, const char* pool_path,
                                   const char* config_json, ns_service** out);
/* A service without a model; model endpoints answer 503. */
NS_API ns_status ns_service_create_unloaded(ns_service** out);
NS_API void ns_service_free(ns_service* service);
/* Dispatches one request without any network I/O. `query` is the raw query
 * string without '?', or NULL. */
NS_API ns_status ns_service_handle(const ns_service* service, const char* method,
                                   const char* path, const char* query, const char* body,
                                   int* out_status, char** out_body);

/* port 0 picks a free port. ui_dir may be NULL. */
NS_API ns_status ns_server_create(const ns_service* service, const char* host, int port,
                                  const char* ui_dir, double timeout_seconds, ns_server** out);
NS_API ns_status ns_server_bind(ns_server* server, int* out_port);
/* Blocks until ns_server_stop() is called from another thread. */
NS_API ns_status ns_server_run(ns_server* server);
NS_API void ns_server_stop(ns_server* server);
NS_API void ns_server_free(ns_server* server);

#ifdef __cplusplus
}
#endif

#endif /* NEPHROSCOPE_NEPHROSCOPE_H_ */
