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

#ifndef NEPHROSCOPE_DIGEST_H_
#define NEPHROSCOPE_DIGEST_H_

#include <filesystem>
#include <string>
#include <string_view>

namespace nephroscope {

// Lowercase hex SHA-256 of the given bytes.
std::string Sha256Hex(std::string_view bytes);

std::string ReadFileBytes(const std::filesystem::path& path);

// Writes through a temporary sibling file and renames it into place, so a
// failure never leaves a partial file at `path`.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace nephroscope

#endif  // NEPHROSCOPE_DIGEST_H_
