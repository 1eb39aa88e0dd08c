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

#ifndef OSQ_RUNNER_HPP
#define OSQ_RUNNER_HPP

#include <string>
#include <utility>
#include <vector>

#include "osq/error.hpp"
#include "osq/json_io.hpp"

namespace osq {

/// Outcome of one config run. `report` is deterministic: identical config
/// yields identical bytes (all wall-clock data goes to `meta`). Certificates
/// are (file stem, JSON) pairs for `--out dir` style replay storage; every
/// one is also embedded in the report.
struct RunResult {
  Json report;
  Json meta;
  std::vector<std::pair<std::string, Json>> certificates;
};

/// Dispatches a JSON config {"op": ..., ...} to the module operations.
/// Ops: norm, membership, dual, coi-verify, complete, pstar, ps, gap-search,
/// factorize. Throws Error: InvalidInput / DomainError for bad configs or
/// data, VerifyFailed when an emitted certificate fails its final audit
/// (always a bug), Internal for solver-state bugs.
RunResult run_config(const Json& config);

/// Process exit code for an error: 2 for input/data problems, 3 for
/// verification failures and internal bugs.
int exit_code_for(ErrorCode c);

}  // namespace osq

#endif  // OSQ_RUNNER_HPP
