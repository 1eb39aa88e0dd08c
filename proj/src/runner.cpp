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

#include "osq/runner.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <string>

#include "osq/duality.hpp"
#include "osq/feasibility.hpp"
#include "osq/opsys.hpp"
#include "osq/quotient.hpp"
#include "osq/tensor.hpp"
#include "osq/version.hpp"

namespace osq {

namespace {

const Json& need(const Json& c, const char* key) {
  if (!c.contains(key)) fail_invalid(std::string("config: missing field '") + key + "'");
  return c.at(key);
}

std::string need_str(const Json& c, const char* key) {
  const Json& v = need(c, key);
  if (!v.is_string()) fail_invalid(std::string("config: field '") + key + "' must be a string");
  return v.get<std::string>();
}

double num_or(const Json& c, const char* key, double dflt) {
  if (!c.contains(key)) return dflt;
  if (!c.at(key).is_number()) fail_invalid(std::string("config: field '") + key + "' must be a number");
  return c.at(key).get<double>();
}

long int_or(const Json& c, const char* key, long dflt) {
  if (!c.contains(key)) return dflt;
  if (!c.at(key).is_number_integer())
    fail_invalid(std::string("config: field '") + key + "' must be an integer");
  return c.at(key).get<long>();
}

long need_int(const Json& c, const char* key) {
  if (!c.contains(key)) fail_invalid(std::string("config: missing field '") + key + "'");
  return int_or(c, key, 0);
}

std::uint64_t seed_or(const Json& c, const char* key, std::uint64_t dflt) {
  if (!c.contains(key)) return dflt;
  if (!c.at(key).is_number_integer())
    fail_invalid(std::string("config: field '") + key + "' must be an integer");
  return c.at(key).get<std::uint64_t>();
}

/// "Mn:2" -> system descriptor.
MatOpSys parse_system_descriptor(const std::string& desc) {
  const std::size_t colon = desc.find(':');
  if (colon == std::string::npos)
    fail_invalid("system descriptor must look like 'Mn:2', got '" + desc + "'");
  const std::string kind = desc.substr(0, colon);
  int n = 0;
  try {
    n = std::stoi(desc.substr(colon + 1));
  } catch (const std::exception&) {
    fail_invalid("system descriptor has a malformed size: '" + desc + "'");
  }
  return make_system(parse_system_kind(kind), n);
}

/// "e12" -> zero-based (i, j), i != j, both in [1, n].
std::pair<int, int> parse_unit_element(const std::string& name, int n) {
  if (name.size() != 3 || name[0] != 'e' || !std::isdigit(name[1]) || !std::isdigit(name[2]))
    fail_invalid("element must look like 'e12' (one-based indices), got '" + name + "'");
  const int i = name[1] - '0', j = name[2] - '0';
  if (i < 1 || j < 1 || i > n || j > n) fail_invalid("element indices out of range: " + name);
  if (i == j) fail_invalid("element must be off-diagonal: " + name);
  return {i - 1, j - 1};
}

/// Final audit of a certificate that is about to be emitted. The solvers
/// re-verify before returning; this is the last structural gate, so any
/// violation is a bug and maps to exit code 3.
void audit_cone_certificate(const ConeCertificate& cert, double tol) {
  try {
    if (cert.status == CertStatus::Feasible) {
      if (!cert.witness.has_value())
        throw Error(ErrorCode::VerifyFailed, "feasible certificate without witness");
      if (!psd_check(*cert.witness, tol).is_psd)
        throw Error(ErrorCode::VerifyFailed, "feasible witness is not PSD at tol");
    } else if (cert.status == CertStatus::Infeasible) {
      if (!cert.separator.has_value())
        throw Error(ErrorCode::VerifyFailed, "infeasible certificate without separator");
      if (!psd_check(*cert.separator, tol).is_psd)
        throw Error(ErrorCode::VerifyFailed, "separator is not PSD at tol");
      if (std::abs(cert.separator->norm() - 1.0) > 1e-6)
        throw Error(ErrorCode::VerifyFailed, "separator is not normalized");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::VerifyFailed) throw;
    throw Error(ErrorCode::VerifyFailed, std::string("certificate audit: ") + e.what());
  }
}

bool looks_like_certificate(const Json& j) {
  if (!j.is_object() || !j.contains("status") || !j.contains("residual") ||
      !j.contains("iterations"))
    return false;
  // Result summaries repeat the status fields next to richer content; a bare
  // certificate carries nothing beyond its own schema.
  for (const auto& kv : j.items())
    if (kv.key() != "status" && kv.key() != "residual" && kv.key() != "iterations" &&
        kv.key() != "witness" && kv.key() != "separator")
      return false;
  return true;
}

/// Recursively audits every embedded cone certificate in a report fragment.
void audit_embedded(const Json& j, double tol) {
  if (looks_like_certificate(j)) {
    ConeCertificate cert;
    try {
      cert = ConeCertificate::from_json(j);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::VerifyFailed, std::string("malformed embedded certificate: ") + e.what());
    }
    audit_cone_certificate(cert, tol);
    return;
  }
  if (j.is_object() || j.is_array())
    for (const auto& item : j) audit_embedded(item, tol);
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json tool_json() { return Json{{"name", kToolName}, {"version", kToolVersion}}; }

// ---------------------------------------------------------------------------
// Ops. Each returns the result JSON, fills the echoed config with effective
// values, and appends replayable certificates.
// ---------------------------------------------------------------------------

QuotientElement quotient_element_from(const MatOpSys& parent, const Mat& rep) {
  if (rep.rows() != rep.cols() || rep.rows() % parent.dim != 0)
    fail_invalid("representative dimension must be a multiple of the parent dimension");
  QuotientElement x;
  x.quo = trace_zero_diagonal_quotient(parent);
  x.level = rep.rows() / parent.dim;
  x.rep = rep;
  return x;
}

Json op_norm(const Json& c, Json& echo, RunResult& out) {
  const std::string system = need_str(c, "system");
  const int n = static_cast<int>(need_int(c, "n"));
  const double tol = num_or(c, "tol", 1e-8);
  const SystemKind kind = parse_system_kind(system);
  if (kind != SystemKind::Mn && kind != SystemKind::Tn)
    fail_invalid("norm: quotients are defined over Mn and Tn parents");
  const MatOpSys parent = make_system(kind, n);

  Mat rep;
  if (c.contains("element") && c.contains("input"))
    fail_invalid("norm: give either 'element' or 'input', not both");
  if (c.contains("element")) {
    const std::string el = need_str(c, "element");
    const auto [i, j] = parse_unit_element(el, n);
    rep = Mat::Zero(n, n);
    rep(i, j) = 1.0;
    echo["element"] = el;
  } else {
    rep = matrix_from_json(need(c, "input"));
    echo["input"] = need(c, "input");
  }
  echo["system"] = system;
  echo["n"] = n;
  echo["tol"] = tol;

  const NormResult r = quotient_norm(quotient_element_from(parent, rep), tol);
  (void)out;
  return Json{{"norm", r.value}, {"lo", r.lo},       {"hi", r.hi},
              {"probes", r.probes}, {"iterations", r.iterations}, {"converged", r.converged}};
}

Json op_membership(const Json& c, Json& echo, RunResult& out) {
  const std::string system = need_str(c, "system");
  const int n = static_cast<int>(need_int(c, "n"));
  const std::string cone = c.contains("cone") ? need_str(c, "cone") : "ambient";
  const double tol = num_or(c, "tol", 1e-8);
  const Mat x = matrix_from_json(need(c, "input"));
  echo["system"] = system;
  echo["n"] = n;
  echo["cone"] = cone;
  echo["tol"] = tol;
  echo["input"] = need(c, "input");

  ConeCertificate cert;
  const SystemKind kind = parse_system_kind(system);
  if (cone == "ambient") {
    const MatOpSys sys = make_system(kind, n);
    if (x.rows() % sys.dim != 0) fail_invalid("membership: dimension not a multiple of the system's");
    cert = ambient_cone_membership(BlockElement::from_ambient(sys, x, x.rows() / sys.dim), tol);
  } else if (cone == "d" || cone == "c") {
    if (kind != SystemKind::Mn && kind != SystemKind::Tn)
      fail_invalid("membership: quotient cones are defined over Mn and Tn parents");
    const MatOpSys parent = make_system(kind, n);
    const QuotientElement q = quotient_element_from(parent, x);
    if (cone == "d") {
      cert = d_cone_membership(q, tol);
    } else {
      const double eps = num_or(c, "eps", 1e-6);
      echo["eps"] = eps;
      cert = c_cone_membership(q, eps, tol);
    }
  } else {
    fail_invalid("membership: cone must be 'ambient', 'd', or 'c'");
  }
  audit_cone_certificate(cert, tol);
  out.certificates.emplace_back("certificate", cert.to_json());
  return Json{{"status", to_string(cert.status)},
              {"residual", cert.residual},
              {"iterations", cert.iterations},
              {"certificate", cert.to_json()}};
}

Json op_dual(const Json& c, Json& echo, RunResult& out) {
  const std::string system = need_str(c, "system");
  const int n = static_cast<int>(need_int(c, "n"));
  const bool quotient = c.contains("quotient") && c.at("quotient").is_boolean() &&
                        c.at("quotient").get<bool>();
  const double tol = num_or(c, "tol", 1e-9);
  const Json& values = need(c, "values");
  if (!values.is_array() || values.empty()) fail_invalid("dual: 'values' must be a nonempty array");
  echo["system"] = system;
  echo["n"] = n;
  echo["quotient"] = quotient;
  echo["tol"] = tol;
  echo["values"] = values;

  DualElement g;
  g.sys = make_system(parse_system_kind(system), n);
  for (const Json& v : values) g.vals.push_back(matrix_from_json(v));
  g.level = g.vals.front().rows();

  const ConeCertificate cert =
      quotient ? quotient_dual_cone_membership(g, tol) : dual_cone_membership(g, tol);
  audit_cone_certificate(cert, tol);
  out.certificates.emplace_back("certificate", cert.to_json());
  return Json{{"status", to_string(cert.status)},
              {"residual", cert.residual},
              {"iterations", cert.iterations},
              {"certificate", cert.to_json()}};
}

Json op_coi_verify(const Json& c, Json& echo, RunResult& out) {
  const std::string map = need_str(c, "map");
  const int levels = static_cast<int>(int_or(c, "levels", 2));
  const long samples = int_or(c, "samples", 50);
  const std::uint64_t seed = seed_or(c, "seed", 1);
  const double tol = num_or(c, "tol", 1e-8);
  echo["map"] = map;
  echo["levels"] = levels;
  echo["samples"] = samples;
  echo["seed"] = seed;
  echo["tol"] = tol;

  const CoiReport rep = verify_coi(parse_coi_map(map), levels, samples, seed, tol);
  (void)out;
  return rep.to_json();
}

Json op_complete(const Json& c, Json& echo, RunResult& out) {
  const double tol = num_or(c, "tol", 1e-9);
  const Json& input = need(c, "input");
  echo["tol"] = tol;
  echo["input"] = input;
  const PartialBandedMat part = partial_from_json(input);
  const HermMat done = tridiag_psd_complete(part, tol);
  const double lam = herm_eigenvalues(done.raw()).minCoeff();
  if (lam < -tol)
    throw Error(ErrorCode::VerifyFailed, "completion result is not PSD at tol");
  (void)out;
  return Json{{"completed", matrix_to_json(done.raw())}, {"min_eig", lam}};
}

Json op_lift(const Json& c, Json& echo, RunResult& out, bool tridiagonal) {
  const MatOpSys t = parse_system_descriptor(need_str(c, "T"));
  const int n = static_cast<int>(need_int(c, "n"));
  const Eigen::Index p = static_cast<Eigen::Index>(int_or(c, "p", 1));
  const long samples = int_or(c, "samples", 50);
  const std::uint64_t seed = seed_or(c, "seed", 1);
  std::vector<double> grid;
  if (c.contains("eps_grid")) {
    if (!c.at("eps_grid").is_array()) fail_invalid("eps_grid must be an array of numbers");
    for (const Json& e : c.at("eps_grid")) grid.push_back(e.get<double>());
  }
  echo["T"] = need_str(c, "T");
  echo["n"] = n;
  echo["p"] = p;
  echo["samples"] = samples;
  echo["seed"] = seed;

  const LiftReport rep = tridiagonal ? ps_check(t, n, p, samples, grid, seed)
                                     : pstar_check(t, n, p, samples, grid, seed);
  echo["eps_grid"] = rep.params.at("eps_grid");
  for (const LiftInstance& in : rep.instances)
    for (const auto& item : in.certificates.items()) {
      char stem[64];
      std::snprintf(stem, sizeof(stem), "instance-%03ld-eps-%s", in.id, item.key().c_str());
      out.certificates.emplace_back(stem, item.value());
    }
  return rep.to_json();
}

Json op_gap_search(const Json& c, Json& echo, RunResult& out) {
  const GapMode mode = parse_gap_mode(need_str(c, "mode"));
  const int n = static_cast<int>(need_int(c, "n"));
  const Eigen::Index p = static_cast<Eigen::Index>(int_or(c, "p", 1));
  const long samples = int_or(c, "samples", 10);
  const std::uint64_t seed = seed_or(c, "seed", 1);
  echo["mode"] = to_string(mode);
  echo["n"] = n;
  echo["p"] = p;
  echo["samples"] = samples;
  echo["seed"] = seed;

  const GapReport rep = gap_search(mode, n, p, samples, seed);
  if (!rep.consistent)
    throw Error(ErrorCode::VerifyFailed, "gap search produced contradictory evidence");
  for (const GapInstance& in : rep.instances) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "instance-%03ld", in.id);
    out.certificates.emplace_back(stem, in.detail);
  }
  return rep.to_json();
}

Json op_factorize(const Json& c, Json& echo, RunResult& out) {
  const int n = static_cast<int>(need_int(c, "n"));
  const Eigen::Index p = static_cast<Eigen::Index>(int_or(c, "p", 1));
  const double tol = num_or(c, "tol", 1e-8);
  const Json& input = need(c, "input");
  if (!input.is_object() || !input.contains("blocks") || !input.at("blocks").is_array())
    fail_invalid("factorize: input must be {\"blocks\": [n*n matrices]}");
  std::vector<Mat> blocks;
  for (const Json& b : input.at("blocks")) blocks.push_back(matrix_from_json(b));
  echo["n"] = n;
  echo["p"] = p;
  echo["tol"] = tol;
  echo["input"] = input;

  const FreeFactorization fr = free_factorization(n, p, blocks, tol);
  audit_cone_certificate(fr.lift, tol);
  out.certificates.emplace_back("lift", fr.lift.to_json());
  Json result{{"status", to_string(fr.lift.status)},
              {"residual", fr.residual},
              {"lift", fr.lift.to_json()}};
  if (fr.lift.status == CertStatus::Feasible) result["factor"] = matrix_to_json(fr.x);
  return result;
}

}  // namespace

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidInput:
    case ErrorCode::DomainError:
      return 2;
    case ErrorCode::VerifyFailed:
      return 3;
    case ErrorCode::Internal:
      return 4;
  }
  return 4;
}

RunResult run_config(const Json& config) {
  RunResult out;
  Json echo;
  Json result;
  try {
    if (!config.is_object()) fail_invalid("config must be a JSON object");
    const std::string op = need_str(config, "op");
    echo["op"] = op;
    if (op == "norm")
      result = op_norm(config, echo, out);
    else if (op == "membership")
      result = op_membership(config, echo, out);
    else if (op == "dual")
      result = op_dual(config, echo, out);
    else if (op == "coi-verify")
      result = op_coi_verify(config, echo, out);
    else if (op == "complete")
      result = op_complete(config, echo, out);
    else if (op == "pstar")
      result = op_lift(config, echo, out, /*tridiagonal=*/false);
    else if (op == "ps")
      result = op_lift(config, echo, out, /*tridiagonal=*/true);
    else if (op == "gap-search")
      result = op_gap_search(config, echo, out);
    else if (op == "factorize")
      result = op_factorize(config, echo, out);
    else
      fail_invalid("unknown op: " + op);
  } catch (const Json::exception& e) {
    fail_invalid(std::string("config: ") + e.what());
  }

  // Last-gate audit of everything that carries certificate shape.
  audit_embedded(result, num_or(config, "tol", 1e-8));

  out.report = Json{{"tool", tool_json()}, {"config", echo}, {"result", result}};
  out.meta = Json{{"tool", tool_json()}, {"timestamp_utc", utc_timestamp()}};
  return out;
}

}  // namespace osq
