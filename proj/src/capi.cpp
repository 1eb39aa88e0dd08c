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

#include "osq/osq.h"

#include <new>
#include <string>
#include <utility>
#include <vector>

#include "osq/error.hpp"
#include "osq/json_io.hpp"
#include "osq/runner.hpp"
#include "osq/version.hpp"

struct osq_result {
  int code = OSQ_OK;
  std::string report;
  std::string meta;
  std::string error;
  std::vector<std::pair<std::string, std::string>> certs;
};

extern "C" {

osq_result* osq_run(const char* config_json) {
  osq_result* r = new (std::nothrow) osq_result;
  if (r == nullptr) return nullptr;
  try {
    if (config_json == nullptr) osq::fail_invalid("config must not be null");
    const osq::Json config = osq::Json::parse(config_json, nullptr, /*allow_exceptions=*/true);
    osq::RunResult run = osq::run_config(config);
    r->report = osq::dump_report(run.report);
    r->meta = osq::dump_report(run.meta);
    for (auto& [name, json] : run.certificates)
      r->certs.emplace_back(name, osq::dump_report(json));
  } catch (const osq::Error& e) {
    r->code = osq::exit_code_for(e.code());
    r->error = e.what();
  } catch (const std::exception& e) {
    r->code = OSQ_INVALID_INPUT;
    r->error = e.what();
  }
  return r;
}

int osq_result_code(const osq_result* r) { return r == nullptr ? OSQ_INVALID_INPUT : r->code; }

const char* osq_result_report(const osq_result* r) {
  return (r == nullptr || r->code != OSQ_OK) ? nullptr : r->report.c_str();
}

const char* osq_result_meta(const osq_result* r) {
  return (r == nullptr || r->code != OSQ_OK) ? nullptr : r->meta.c_str();
}

const char* osq_result_error(const osq_result* r) {
  return (r == nullptr || r->code == OSQ_OK) ? nullptr : r->error.c_str();
}

size_t osq_result_cert_count(const osq_result* r) { return r == nullptr ? 0 : r->certs.size(); }

const char* osq_result_cert_name(const osq_result* r, size_t i) {
  return (r == nullptr || i >= r->certs.size()) ? nullptr : r->certs[i].first.c_str();
}

const char* osq_result_cert_json(const osq_result* r, size_t i) {
  return (r == nullptr || i >= r->certs.size()) ? nullptr : r->certs[i].second.c_str();
}

void osq_result_free(osq_result* r) { delete r; }

const char* osq_version(void) { return osq::kToolVersion; }

}  // extern "C"
