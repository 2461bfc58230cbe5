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

#include "nephroscope/schema.h"

#include <cctype>
#include <utility>

#include "nephroscope/digest.h"
#include "nephroscope/status.h"

namespace nephroscope {

bool EqualsIgnoreCase(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> specs,
                             std::string target_name)
    : specs_(std::move(specs)), target_name_(std::move(target_name)) {
  for (size_t i = 0; i < specs_.size(); ++i) {
    if (specs_[i].name.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "data_core",
                  "feature " + std::to_string(i) + " has an empty name");
    }
    for (size_t j = 0; j < i; ++j) {
      if (EqualsIgnoreCase(specs_[i].name, specs_[j].name)) {
        throw Error(ErrorCode::kInvalidArgument, "data_core",
                    "duplicate feature name '" + specs_[i].name + "'");
      }
    }
  }
}

std::optional<size_t> FeatureSchema::IndexOf(std::string_view name) const {
  for (size_t i = 0; i < specs_.size(); ++i) {
    if (EqualsIgnoreCase(specs_[i].name, name)) return i;
  }
  return std::nullopt;
}

size_t FeatureSchema::RequireIndex(std::string_view name) const {
  auto index = IndexOf(name);
  if (!index) {
    throw Error(ErrorCode::kNotFound, "data_core",
                "unknown feature '" + std::string(name) + "'");
  }
  return *index;
}

std::vector<size_t> FeatureSchema::NumericIndices() const {
  std::vector<size_t> out;
  for (size_t i = 0; i < specs_.size(); ++i) {
    if (!specs_[i].is_binary()) out.push_back(i);
  }
  return out;
}

std::vector<size_t> FeatureSchema::BinaryIndices() const {
  std::vector<size_t> out;
  for (size_t i = 0; i < specs_.size(); ++i) {
    if (specs_[i].is_binary()) out.push_back(i);
  }
  return out;
}

std::string FeatureSchema::Hash() const {
  std::string canonical = "target=" + target_name_ + ";";
  for (const auto& spec : specs_) {
    canonical += spec.name;
    canonical += spec.is_binary() ? ":binary;" : ":numeric;";
  }
  return Sha256Hex(canonical);
}

bool FeatureSchema::operator==(const FeatureSchema& other) const {
  if (specs_.size() != other.specs_.size()) return false;
  if (target_name_ != other.target_name_) return false;
  for (size_t i = 0; i < specs_.size(); ++i) {
    if (specs_[i].name != other.specs_[i].name ||
        specs_[i].kind != other.specs_[i].kind) {
      return false;
    }
  }
  return true;
}

const FeatureSchema& CkdSchema() {
  static const FeatureSchema* schema = [] {
    auto binary = [](std::string name, bool risk_factor) {
      FeatureSpec spec;
      spec.name = std::move(name);
      spec.kind = FeatureKind::kBinary;
      spec.unit = "0/1";
      spec.risk_factor = risk_factor;
      return spec;
    };
    auto numeric = [](std::string name, std::string unit, double lo, double hi,
                      bool missing_allowed = false) {
      FeatureSpec spec;
      spec.name = std::move(name);
      spec.kind = FeatureKind::kNumeric;
      spec.unit = std::move(unit);
      spec.allowed_range = ValueRange{lo, hi};
      spec.missing_allowed = missing_allowed;
      return spec;
    };
    std::vector<FeatureSpec> specs = {
        binary("gender", false),
        numeric("age", "years", 18, 110),
        binary("DM", true),
        binary("CHD", true),
        binary("Vascular_disease", true),
        binary("smoking", true),
        binary("HT", true),
        binary("DLP", true),
        binary("Obesity", true),
        binary("DLP_meds", true),
        binary("DM_meds", true),
        binary("HT_meds", true),
        binary("ACEI_ARB", true),
        numeric("Chol", "mmol/L", 1.0, 15.0),
        numeric("TG", "mmol/L", 0.1, 15.0, /*missing_allowed=*/true),
        numeric("HbA1C", "%", 3.0, 18.0, /*missing_allowed=*/true),
        numeric("Cr", "umol/L", 10.0, 1500.0),
        numeric("eGFR", "mL/min/1.73m2", 5.0, 300.0),
        numeric("SBP", "mmHg", 60.0, 260.0),
        numeric("DBP", "mmHg", 30.0, 160.0),
        numeric("BMI", "kg/m2", 10.0, 80.0),
    };
    return new FeatureSchema(std::move(specs), "Label");
  }();
  return *schema;
}

}  // namespace nephroscope
