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

#ifndef NEPHROSCOPE_STATUS_H_
#define NEPHROSCOPE_STATUS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace nephroscope {

enum class ErrorCode {
  kInvalidArgument,
  kDataError,
  kIoError,
  kNotFound,
  kSchemaMismatch,
  kDegenerate,
  kInternal,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure raised by the library. The message is prefixed with the
// module that raised it, e.g. "data_core: row 3, column 'gender': ...".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string_view module, std::string_view message);

  ErrorCode code() const { return code_; }
  const std::string& module() const { return module_; }

 private:
  ErrorCode code_;
  std::string module_;
};

}  // namespace nephroscope

#endif  // NEPHROSCOPE_STATUS_H_
