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

#ifndef OSQ_JSON_IO_HPP
#define OSQ_JSON_IO_HPP

#include <json.hpp>
#include <string>

#include "osq/linalg.hpp"

namespace osq {

using Json = nlohmann::json;

/// Matrix wire format: {"dim": n, "re": [[...]], "im": [[...]]}. "im" may be
/// omitted for real matrices. Rectangular matrices additionally carry "cols".
Json matrix_to_json(const Mat& m);
Mat matrix_from_json(const Json& j);

/// Partial matrices add "mask" (0/1 per scalar entry, block-aligned) and an
/// optional "block" size (default 1) plus optional "bandwidth" (default 1).
Json partial_to_json(const PartialBandedMat& p);
PartialBandedMat partial_from_json(const Json& j);

/// Canonical serialization used for reports: sorted keys, two-space indent,
/// trailing newline. Deterministic for identical content.
std::string dump_report(const Json& j);

}  // namespace osq

#endif  // OSQ_JSON_IO_HPP
