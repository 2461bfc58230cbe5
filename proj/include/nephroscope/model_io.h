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

// Self-describing model file: schema, scaler, trained model, operating
// threshold, attribution background and the run manifest digest.
//
// The file is a JSON document ("format": "nephroscope-model", "version": 1).
// Doubles are written in shortest round-trip form, so save -> load reproduces
// every parameter bit for bit.

#ifndef NEPHROSCOPE_MODEL_IO_H_
#define NEPHROSCOPE_MODEL_IO_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nephroscope/dataset.h"
#include "nephroscope/model.h"

namespace nephroscope {

inline constexpr int kModelFormatVersion = 1;

struct ModelBundle {
  FeatureSchema schema;
  ScalerParams scaler;
  Model model;
  double threshold = 0.5;
  std::string threshold_policy;
  // Scaled rows used as the default attribution background.
  std::vector<std::vector<double>> background;
  std::string champion;  // e.g. "forest{max_features=5, min_samples_leaf=2}"
  std::string manifest_digest;
};

std::string SerializeBundle(const ModelBundle& bundle);
ModelBundle DeserializeBundle(std::string_view text);

void SaveBundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle LoadBundle(const std::filesystem::path& path);

// SHA-256 of the serialized bundle; identifies the model in service replies.
std::string BundleDigest(const ModelBundle& bundle);

// Background rows as a scaled dataset over the bundle schema.
Dataset BackgroundDataset(const ModelBundle& bundle);

}  // namespace nephroscope

#endif  // NEPHROSCOPE_MODEL_IO_H_
