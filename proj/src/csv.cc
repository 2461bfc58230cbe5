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

#include "csv.h"

#include <charconv>
#include <cmath>
#include <system_error>

#include "nephroscope/status.h"

namespace nephroscope::internal {
namespace {

std::string Trim(std::string_view field) {
  size_t begin = 0;
  size_t end = field.size();
  while (begin < end && (field[begin] == ' ' || field[begin] == '\t')) ++begin;
  while (end > begin && (field[end - 1] == ' ' || field[end - 1] == '\t')) --end;
  return std::string(field.substr(begin, end - begin));
}

bool IsBlank(const std::vector<std::string>& row) {
  for (const auto& field : row) {
    if (!field.empty()) return false;
  }
  return true;
}

}  // namespace

CsvTable ReadCsvTable(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_quoted = false;
  size_t line_number = 1;

  auto end_field = [&] {
    row.push_back(field_quoted ? field : Trim(field));
    field.clear();
    field_quoted = false;
  };
  auto end_row = [&] {
    end_field();
    if (!IsBlank(row)) lines.push_back(std::move(row));
    row.clear();
  };

  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_number;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!Trim(field).empty()) {
          throw Error(ErrorCode::kDataError, "data_core",
                      "line " + std::to_string(line_number) +
                          ": stray quote inside unquoted field");
        }
        field.clear();
        in_quotes = true;
        field_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        ++line_number;
        break;
      default:
        field.push_back(c);
    }
  }
  if (in_quotes) {
    throw Error(ErrorCode::kDataError, "data_core", "unterminated quoted field");
  }
  if (!field.empty() || !row.empty()) end_row();

  CsvTable table;
  if (lines.empty()) return table;
  table.header = std::move(lines.front());
  table.rows.assign(std::make_move_iterator(lines.begin() + 1),
                    std::make_move_iterator(lines.end()));
  return table;
}

std::string FormatDouble(double value) {
  if (std::isnan(value)) return "NA";
  char buffer[64];
  auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (result.ec != std::errc()) {
    throw Error(ErrorCode::kInternal, "data_core", "cannot format number");
  }
  return std::string(buffer, result.ptr);
}

std::optional<double> ParseNumber(std::string_view text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin != end && *begin == '+') ++begin;
  auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end) return std::nullopt;
  return value;
}

std::optional<double> ParseBinary(std::string_view text) {
  if (EqualsIgnoreCase(text, "no") || EqualsIgnoreCase(text, "woman") ||
      EqualsIgnoreCase(text, "female")) {
    return 0.0;
  }
  if (EqualsIgnoreCase(text, "yes") || EqualsIgnoreCase(text, "man") ||
      EqualsIgnoreCase(text, "male")) {
    return 1.0;
  }
  auto number = ParseNumber(text);
  if (number && (*number == 0.0 || *number == 1.0)) return number;
  return std::nullopt;
}

std::optional<Label> ParseLabel(std::string_view text) {
  if (EqualsIgnoreCase(text, "no") || text == "0" ||
      EqualsIgnoreCase(text, "nockd")) {
    return Label::kNoCkd;
  }
  if (EqualsIgnoreCase(text, "yes") || text == "1" ||
      EqualsIgnoreCase(text, "ckd")) {
    return Label::kCkd;
  }
  return std::nullopt;
}

}  // namespace nephroscope::internal
