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

// Typed description of the clinical feature table.

#ifndef NEPHROSCOPE_SCHEMA_H_
#define NEPHROSCOPE_SCHEMA_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nephroscope {

enum class FeatureKind {
  kNumeric,
  // Encoded strictly as 0 or 1 (no/woman = 0, yes/man = 1).
  kBinary,
};

struct ValueRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  std::string unit;
  // Values outside the range are reported as warnings on ingestion.
  std::optional<ValueRange> allowed_range;
  // Only features flagged here may be empty in a raw CSV.
  bool missing_allowed = false;
  // Binary comorbidity / medication flags used by error analysis narratives.
  bool risk_factor = false;

  bool is_binary() const { return kind == FeatureKind::kBinary; }
};

class FeatureSchema {
 public:
  // Throws Error(kInvalidArgument) on duplicate (case-insensitive) names.
  explicit FeatureSchema(std::vector<FeatureSpec> specs,
                         std::string target_name = "Label");

  size_t size() const { return specs_.size(); }
  const FeatureSpec& spec(size_t index) const { return specs_.at(index); }
  std::span<const FeatureSpec> specs() const { return specs_; }
  const std::string& target_name() const { return target_name_; }

  // Case-insensitive lookup.
  std::optional<size_t> IndexOf(std::string_view name) const;
  // Like IndexOf but throws Error(kNotFound) naming the feature.
  size_t RequireIndex(std::string_view name) const;

  std::vector<size_t> NumericIndices() const;
  std::vector<size_t> BinaryIndices() const;

  // SHA-256 over names, kinds and order. Stored in model files so a model is
  // never applied to a differently shaped table.
  std::string Hash() const;

  bool operator==(const FeatureSchema& other) const;

 private:
  std::vector<FeatureSpec> specs_;
  std::string target_name_;
};

// Column positions of the canonical 21-feature CKD schema.
namespace ckd {
enum Feature : size_t {
  kGender = 0,
  kAge,
  kDM,
  kCHD,
  kVascularDisease,
  kSmoking,
  kHT,
  kDLP,
  kObesity,
  kDLPMeds,
  kDMMeds,
  kHTMeds,
  kACEIARB,
  kChol,
  kTG,
  kHbA1C,
  kCr,
  kEGFR,
  kSBP,
  kDBP,
  kBMI,
  kFeatureCount,
};
}  // namespace ckd

const FeatureSchema& CkdSchema();

bool EqualsIgnoreCase(std::string_view a, std::string_view b);

}  // namespace nephroscope

#endif  // NEPHROSCOPE_SCHEMA_H_
