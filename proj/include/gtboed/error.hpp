// Copyright 2020 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GTBOED_ERROR_HPP_
#define GTBOED_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gtboed {

enum class ErrorCode {
  kInvalidArgument,
  kConfiguration,
  kDegenerateEvidence,
  kNotFound,
  kConflict,
  kIo,
  kInternal,
};

const char* ErrorCodeName(ErrorCode code);

// Single exception type for the library. `fields` carries per-field
// diagnostics for configuration errors (field name, message).
class Error : public std::runtime_error {
 public:
  using FieldErrors = std::vector<std::pair<std::string, std::string>>;

  Error(ErrorCode code, const std::string& message, FieldErrors fields = {})
      : std::runtime_error(message), code_(code), fields_(std::move(fields)) {}

  ErrorCode code() const noexcept { return code_; }
  const FieldErrors& fields() const noexcept { return fields_; }

 private:
  ErrorCode code_;
  FieldErrors fields_;
};

[[noreturn]] inline void ThrowInvalidArgument(const std::string& message) {
  throw Error(ErrorCode::kInvalidArgument, message);
}

[[noreturn]] inline void ThrowConfiguration(const std::string& message) {
  throw Error(ErrorCode::kConfiguration, message);
}

}  // namespace gtboed

#endif  // GTBOED_ERROR_HPP_
