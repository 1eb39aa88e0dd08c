// Copyright 2026 The osq Authors
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

#ifndef OSQ_ERROR_HPP
#define OSQ_ERROR_HPP

#include <stdexcept>
#include <string>

namespace osq {

/// Error categories surfaced through the C API and the CLI exit codes.
enum class ErrorCode {
  InvalidInput = 2,   // malformed or inconsistent arguments
  VerifyFailed = 3,   // an emitted certificate failed re-verification (a bug)
  DomainError = 4,    // input outside an operation's mathematical domain
  Internal = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail_invalid(const std::string& msg) { throw Error(ErrorCode::InvalidInput, msg); }
[[noreturn]] inline void fail_domain(const std::string& msg) { throw Error(ErrorCode::DomainError, msg); }

}  // namespace osq

#endif  // OSQ_ERROR_HPP
