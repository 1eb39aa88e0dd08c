/* Copyright 2026 The osq Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface of the osq shared library. One entry point runs a JSON config
 * and returns an opaque result handle carrying the report, a timestamp
 * sidecar, and the replayable certificates. All strings are UTF-8 JSON owned
 * by the handle; they stay valid until osq_result_free.
 */

#ifndef OSQ_OSQ_H
#define OSQ_OSQ_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes, aligned with the CLI exit codes. */
#define OSQ_OK 0
#define OSQ_INVALID_INPUT 2 /* malformed config or data outside the domain */
#define OSQ_VERIFY_FAILED 3 /* an emitted certificate failed its audit: a bug */
#define OSQ_INTERNAL 4      /* numerical machinery failed; result unusable */

typedef struct osq_result osq_result;

/* Runs the JSON config {"op": "norm" | "membership" | "dual" | "coi-verify" |
 * "complete" | "pstar" | "ps" | "gap-search" | "factorize", ...}. Never
 * returns NULL except on allocation failure. Always inspect
 * osq_result_code before touching the report. */
osq_result* osq_run(const char* config_json);

/* OSQ_OK, OSQ_INVALID_INPUT, OSQ_VERIFY_FAILED, or OSQ_INTERNAL. */
int osq_result_code(const osq_result* r);

/* Deterministic report JSON (config + tool version embedded); NULL unless
 * the code is OSQ_OK. */
const char* osq_result_report(const osq_result* r);

/* Timestamp sidecar JSON; NULL unless the code is OSQ_OK. */
const char* osq_result_meta(const osq_result* r);

/* Human-readable message; NULL when the code is OSQ_OK. */
const char* osq_result_error(const osq_result* r);

/* Replayable certificates: count, file stem of the i-th, JSON of the i-th.
 * Name/json return NULL when i is out of range. */
size_t osq_result_cert_count(const osq_result* r);
const char* osq_result_cert_name(const osq_result* r, size_t i);
const char* osq_result_cert_json(const osq_result* r, size_t i);

void osq_result_free(osq_result* r);

/* Semantic version of the library, e.g. "0.1.0". */
const char* osq_version(void);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* OSQ_OSQ_H */
