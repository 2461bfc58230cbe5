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

#ifndef NEPHROSCOPE_SRC_CSV_H_
#define NEPHROSCOPE_SRC_CSV_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nephroscope/dataset.h"

namespace nephroscope::internal {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC 4180-style reader: comma separated, optional double quotes, CRLF or LF
// line endings, UTF-8 BOM skipped. Blank lines are ignored. Fields are
// trimmed of surrounding spaces.
CsvTable ReadCsvTable(std::string_view text);

// Shortest decimal form that parses back to the same double.
std::string FormatDouble(double value);

// Whole-string decimal parse; a leading '+' is accepted.
std::optional<double> ParseNumber(std::string_view text);
// 0/1, no/yes, woman/man, female/male (case-insensitive).
std::optional<double> ParseBinary(std::string_view text);
// no/yes, 0/1, noCKD/CKD (case-insensitive).
std::optional<Label> ParseLabel(std::string_view text);

}  // namespace nephroscope::internal

#endif  // NEPHROSCOPE_SRC_CSV_H_
