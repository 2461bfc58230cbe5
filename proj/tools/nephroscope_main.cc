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

// nephroscope: command-line front end over the C API.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 blocking safety failure.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "nephroscope/nephroscope.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitBlocking = 3;

struct CliFailure {
  int exit_code;
  std::string message;
};

int ExitCodeFor(ns_status status) {
  return status == NS_ERR_INVALID_ARGUMENT || status == NS_ERR_NOT_FOUND ? kExitUsage : kExitData;
}

void Check(ns_status status) {
  if (status != NS_OK) throw CliFailure{ExitCodeFor(status), ns_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
};

using Dataset = Handle<ns_dataset, ns_dataset_free>;
using Model = Handle<ns_model, ns_model_free>;
using Report = Handle<ns_report, ns_report_free>;
using Service = Handle<ns_service, ns_service_free>;
using Server = Handle<ns_server, ns_server_free>;

std::string TakeString(char* s) {
  std::string out = s == nullptr ? "" : s;
  ns_string_free(s);
  return out;
}

struct ConfigFlags {
  std::string path;
  std::optional<uint64_t> seed;
  std::optional<std::string> threshold_policy;
  std::optional<size_t> smote_k;
  std::optional<double> smote_ratio;

  void Register(CLI::App* app, bool training) {
    app->add_option("--config", path, "JSON configuration file")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "Run seed (overrides the config)");
    if (training) {
      app->add_option("--threshold-policy", threshold_policy,
                      "Operating threshold policy, e.g. floor:0.6 or fixed:0.5");
      app->add_option("--smote-k", smote_k, "SMOTE-NC neighbours");
      app->add_option("--smote-ratio", smote_ratio, "SMOTE-NC target minority:majority ratio");
    }
  }

  // Config file (or defaults) with command-line overrides applied, in
  // canonical form.
  std::string Resolve() const {
    std::string text;
    if (path.empty()) {
      char* defaults = nullptr;
      Check(ns_config_default(&defaults));
      text = TakeString(defaults);
    } else {
      std::ifstream in(path, std::ios::binary);
      std::stringstream buffer;
      buffer << in.rdbuf();
      text = buffer.str();
    }
    nlohmann::ordered_json doc = nlohmann::ordered_json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw CliFailure{kExitUsage, "cli: config: '" + path + "' is not a JSON object"};
    }
    if (seed) doc["seed"] = *seed;
    if (threshold_policy) doc["threshold_policy"] = *threshold_policy;
    if (smote_k) doc["smote"]["k_neighbors"] = *smote_k;
    if (smote_ratio) doc["smote"]["target_ratio"] = *smote_ratio;
    char* canonical = nullptr;
    Check(ns_config_canonical(doc.dump().c_str(), &canonical));
    return TakeString(canonical);
  }
};

void LoadData(const std::string& path, Dataset& out) {
  Check(ns_dataset_load_csv(path.c_str(), &out.ptr));
  char* warnings = nullptr;
  Check(ns_dataset_warnings_json(out.ptr, &warnings));
  const auto list = nlohmann::json::parse(TakeString(warnings));
  for (const auto& w : list) {
    std::cerr << "warning: " << path << ": row " << w["row"].get<size_t>() + 1 << ": "
              << w["message"].get<std::string>() << "\n";
  }
}

void Emit(const ns_report* report, const std::string& format) {
  std::cout << (format == "json" ? ns_report_json(report) : ns_report_text(report));
  std::cout.flush();
}

void WriteText(const std::string& dir, const std::string& name, const std::string& content) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path path = std::filesystem::path(dir) / name;
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw CliFailure{kExitData, "cli: cannot write '" + path.string() + "'"};
  }
  std::filesystem::rename(tmp, path);
}

void SaveReport(const ns_report* report, const std::string& dir, const std::string& stem) {
  if (dir.empty()) return;
  WriteText(dir, stem + ".json", ns_report_json(report));
  WriteText(dir, stem + ".txt", ns_report_text(report));
  Check(ns_report_write_files(report, dir.c_str()));
}

ns_server* g_server = nullptr;

void ServeUntilSignalled(ns_server* server) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  g_server = server;
  std::thread([signals] {
    int received = 0;
    sigwait(&signals, &received);
    ns_server_stop(g_server);
  }).detach();
  Check(ns_server_run(server));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nephroscope: CKD screening model training and explanation"};
  app.set_version_flag("--version", std::string(ns_version()));
  app.require_subcommand(1);

  std::string format = "text";
  auto add_format = [&format](CLI::App* sub) {
    sub->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"json", "text"}))
        ->capture_default_str();
  };

  // train
  auto* train = app.add_subcommand("train", "Train, select and evaluate the screening model");
  std::string train_data;
  std::string train_out = "out";
  ConfigFlags train_config;
  train->add_option("--data", train_data, "Raw CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--out-dir", train_out, "Artifact directory")->capture_default_str();
  train_config.Register(train, true);
  add_format(train);

  // explain
  auto* explain = app.add_subcommand("explain", "Explain a trained model");
  std::string explain_model;
  std::string explain_data;
  std::string explain_pool;
  std::string explain_out;
  std::string mode;
  std::string target;
  std::optional<int64_t> row;
  std::optional<std::string> feature;
  ConfigFlags explain_config;
  explain->add_option("mode", mode, "global | prototypes | counterfactual | pdp | anchor | errors")
      ->required()
      ->check(CLI::IsMember({"global", "prototypes", "counterfactual", "pdp", "anchor", "errors"}));
  explain->add_option("target", target, "Row index (counterfactual, anchor) or feature (pdp)");
  explain->add_option("--model", explain_model, "model.json")->required()->check(CLI::ExistingFile);
  explain->add_option("--data", explain_data, "Raw CSV")->required()->check(CLI::ExistingFile);
  explain->add_option("--row", row, "0-based data row");
  explain->add_option("--feature", feature, "Feature name");
  explain->add_option("--pool", explain_pool, "Counterfactual pool CSV")->check(CLI::ExistingFile);
  explain->add_option("--out-dir", explain_out, "Write report and CSV exports here");
  explain_config.Register(explain, false);
  add_format(explain);

  // safety
  auto* safety = app.add_subcommand("safety", "Run an edge-case safety suite");
  std::string safety_model;
  std::string suite_path;
  std::string safety_out;
  safety->add_option("--model", safety_model, "model.json")->required()->check(CLI::ExistingFile);
  safety->add_option("--suite", suite_path, "YAML suite (default: bundled edge cases)")
      ->check(CLI::ExistingFile);
  safety->add_option("--out-dir", safety_out, "Write the report here");
  add_format(safety);

  // serve
  auto* serve = app.add_subcommand("serve", "Serve predictions and explanations over HTTP");
  std::string serve_model;
  std::string serve_pool;
  bool no_pool = false;
  std::string host = "127.0.0.1";
  int port = 8750;
  std::string ui_dir;
  double timeout = 2.0;
  ConfigFlags serve_config;
  serve->add_option("--model", serve_model, "model.json")->required()->check(CLI::ExistingFile);
  serve->add_option("--pool", serve_pool, "Counterfactual pool CSV (default: pool.csv beside the model)");
  serve->add_flag("--no-pool", no_pool, "Serve without a counterfactual pool");
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();
  serve->add_option("--serve-ui", ui_dir, "Static UI directory mounted at /")
      ->check(CLI::ExistingDirectory);
  serve->add_option("--timeout", timeout, "Request read/write budget in seconds")
      ->capture_default_str();
  serve_config.Register(serve, false);

  // report
  auto* report_cmd = app.add_subcommand("report", "Evaluate a model on labeled data");
  std::string report_model;
  std::string report_data;
  std::string report_out;
  ConfigFlags report_config;
  report_cmd->add_option("--model", report_model, "model.json")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--data", report_data, "Labeled raw CSV")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--out-dir", report_out, "Write the report here");
  report_config.Register(report_cmd, false);
  add_format(report_cmd);

  // generate
  auto* generate = app.add_subcommand("generate", "Write the synthetic CKD cohort");
  size_t rows = 491;
  double prevalence = 0.114;
  uint64_t gen_seed = 42;
  std::string gen_out;
  generate->add_option("--rows", rows, "Records")->capture_default_str();
  generate->add_option("--prevalence", prevalence, "CKD fraction")->capture_default_str();
  generate->add_option("--seed", gen_seed, "Seed")->capture_default_str();
  generate->add_option("--out", gen_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed()) {
      const std::string config = train_config.Resolve();
      Dataset data;
      LoadData(train_data, data);
      Report report;
      Check(ns_train(data.ptr, config.c_str(), train_out.c_str(), &report.ptr));
      Emit(report.ptr, format);
      return kExitOk;
    }
    if (explain->parsed()) {
      if (!target.empty()) {
        if (mode == "pdp") {
          feature = target;
        } else {
          try {
            row = std::stoll(target);
          } catch (const std::exception&) {
            throw CliFailure{kExitUsage, "cli: row must be an integer, got '" + target + "'"};
          }
        }
      }
      if ((mode == "counterfactual" || mode == "anchor") && !row) {
        throw CliFailure{kExitUsage, "cli: " + mode + " requires a row"};
      }
      if (mode == "pdp" && !feature) throw CliFailure{kExitUsage, "cli: pdp requires a feature"};
      const std::string config = explain_config.Resolve();
      Model model;
      Check(ns_model_load(explain_model.c_str(), &model.ptr));
      Dataset data;
      LoadData(explain_data, data);
      Dataset pool;
      if (!explain_pool.empty()) LoadData(explain_pool, pool);
      Report report;
      Check(ns_explain(model.ptr, data.ptr, mode.c_str(), row.value_or(-1),
                       feature ? feature->c_str() : nullptr, pool.ptr, config.c_str(), &report.ptr));
      SaveReport(report.ptr, explain_out, mode);
      Emit(report.ptr, format);
      return kExitOk;
    }
    if (safety->parsed()) {
      Model model;
      Check(ns_model_load(safety_model.c_str(), &model.ptr));
      std::string yaml;
      if (!suite_path.empty()) {
        std::ifstream in(suite_path, std::ios::binary);
        std::stringstream buffer;
        buffer << in.rdbuf();
        yaml = buffer.str();
      }
      Report report;
      Check(ns_safety_run(model.ptr, suite_path.empty() ? nullptr : yaml.c_str(), &report.ptr));
      SaveReport(report.ptr, safety_out, "safety_report");
      Emit(report.ptr, format);
      return ns_report_blocking_failure(report.ptr) ? kExitBlocking : kExitOk;
    }
    if (serve->parsed()) {
      const std::string config = serve_config.Resolve();
      std::string pool_path = serve_pool;
      if (pool_path.empty() && !no_pool) {
        const auto beside = std::filesystem::path(serve_model).parent_path() / "pool.csv";
        if (std::filesystem::exists(beside)) pool_path = beside.string();
      }
      Service service;
      Check(ns_service_create(serve_model.c_str(), pool_path.empty() || no_pool ? nullptr : pool_path.c_str(),
                              config.c_str(), &service.ptr));
      Server server;
      Check(ns_server_create(service.ptr, host.c_str(), port, ui_dir.empty() ? nullptr : ui_dir.c_str(),
                             timeout, &server.ptr));
      int bound = 0;
      Check(ns_server_bind(server.ptr, &bound));
      std::cerr << "listening on http://" << host << ":" << bound << "\n";
      ServeUntilSignalled(server.ptr);
      return kExitOk;
    }
    if (report_cmd->parsed()) {
      const std::string config = report_config.Resolve();
      Model model;
      Check(ns_model_load(report_model.c_str(), &model.ptr));
      Dataset data;
      LoadData(report_data, data);
      Report report;
      Check(ns_evaluate(model.ptr, data.ptr, config.c_str(), &report.ptr));
      SaveReport(report.ptr, report_out, "evaluation");
      Emit(report.ptr, format);
      return kExitOk;
    }
    if (generate->parsed()) {
      Dataset data;
      Check(ns_dataset_generate_synthetic(rows, prevalence, gen_seed, &data.ptr));
      Check(ns_dataset_write_csv(data.ptr, gen_out.c_str()));
      std::cerr << "wrote " << ns_dataset_size(data.ptr) << " records to " << gen_out << "\n";
      return kExitOk;
    }
  } catch (const CliFailure& failure) {
    std::cerr << "error: " << failure.message << "\n";
    return failure.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
